//! Exact balanced transportation (Word Mover's Distance), used as a reference
//! for the relaxed semantic scorer rather than for ranking.

use serde::{Deserialize, Serialize};

use crate::corpus::{TermWeights, WeightScheme};
use crate::embeddings::EmbeddingTable;
use crate::{Error, Result};

const BALANCE_TOLERANCE: f64 = 1e-9;

/// Sparse non-negative flow between source terms (rows) and target terms
/// (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    entries: Vec<(usize, usize, f64)>,
}

impl FlowMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, entries: Vec<(usize, usize, f64)>) -> Self {
        FlowMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .iter()
            .filter(|&&(i, j, _)| i == row && j == col)
            .map(|e| e.2)
            .sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.rows.len()];
        for &(i, _, f) in &self.entries {
            sums[i] += f;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols.len()];
        for &(_, j, f) in &self.entries {
            sums[j] += f;
        }
        sums
    }

    /// `sum T_ij * c(row_i, col_j)`.
    pub fn total<F: Fn(&str, &str) -> f64>(&self, cost: F) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, f)| f * cost(&self.rows[i], &self.cols[j]))
            .sum()
    }
}

/// Minimum-cost transport from `supply` to `demand` with a dense row-major
/// `cost` matrix, by successive shortest augmenting paths. Returns the optimal
/// cost and the dense flow.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (n, m) = (supply.len(), demand.len());
    if cost.len() != n * m {
        return Err(Error::invalid(
            "cost matrix",
            format!("{} entries for a {n}x{m} problem", cost.len()),
        ));
    }
    if supply
        .iter()
        .chain(demand)
        .chain(cost)
        .any(|x| !x.is_finite())
    {
        return Err(Error::invalid("transport problem", "non-finite input"));
    }
    if supply.iter().chain(demand).any(|&x| x < 0.0) {
        return Err(Error::invalid("transport problem", "negative mass"));
    }
    let source_mass: f64 = supply.iter().sum();
    let target_mass: f64 = demand.iter().sum();
    if (source_mass - target_mass).abs() > BALANCE_TOLERANCE {
        return Err(Error::Unbalanced {
            source_mass,
            target_mass,
        });
    }

    let scale = source_mass.max(1.0);
    let eps = 1e-15 * scale;
    let relax_tol = 1e-13 * cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let mut flow = vec![0.0; n * m];
    let mut rem_s = supply.to_vec();
    let mut rem_d = demand.to_vec();

    // nodes: sources 0..n, sinks n..n+m
    let mut dist = vec![f64::INFINITY; n + m];
    let mut pred: Vec<Option<usize>> = vec![None; n + m];
    loop {
        if !rem_s.iter().any(|&r| r > eps) || !rem_d.iter().any(|&r| r > eps) {
            break;
        }
        dist.fill(f64::INFINITY);
        pred.fill(None);
        for i in 0..n {
            if rem_s[i] > eps {
                dist[i] = 0.0;
            }
        }
        // Bellman-Ford over the residual graph
        for _ in 0..(n + m) {
            let mut changed = false;
            for i in 0..n {
                if dist[i] == f64::INFINITY {
                    continue;
                }
                for j in 0..m {
                    let nd = dist[i] + cost[i * m + j];
                    if nd < dist[n + j] - relax_tol {
                        dist[n + j] = nd;
                        pred[n + j] = Some(i);
                        changed = true;
                    }
                }
            }
            for j in 0..m {
                if dist[n + j] == f64::INFINITY {
                    continue;
                }
                for i in 0..n {
                    if flow[i * m + j] > eps {
                        let nd = dist[n + j] - cost[i * m + j];
                        if nd < dist[i] - relax_tol {
                            dist[i] = nd;
                            pred[i] = Some(n + j);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let Some(sink) = (0..m)
            .filter(|&j| rem_d[j] > eps && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]))
        else {
            break;
        };

        // walk back to the originating source, collecting the bottleneck
        let mut bottleneck = rem_d[sink];
        let mut node = n + sink;
        let mut path = Vec::new();
        while let Some(p) = pred[node] {
            path.push((p, node));
            if p >= n {
                // reverse edge sink p -> source node cancels flow on (node, p)
                bottleneck = bottleneck.min(flow[node * m + (p - n)]);
            }
            node = p;
            if path.len() > n + m {
                return Err(Error::invalid(
                    "transport problem",
                    "cycle in residual path",
                ));
            }
        }
        let source = node;
        bottleneck = bottleneck.min(rem_s[source]);
        if bottleneck <= 0.0 {
            break;
        }
        for &(from, to) in &path {
            if from < n {
                flow[from * m + (to - n)] += bottleneck;
            } else {
                let cell = &mut flow[to * m + (from - n)];
                *cell -= bottleneck;
                if *cell < eps {
                    *cell = 0.0;
                }
            }
        }
        rem_s[source] -= bottleneck;
        rem_d[sink] -= bottleneck;
    }

    let total = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
    Ok((total, flow))
}

fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact Word Mover's Distance between two normalized bags of words, with
/// Euclidean distance between embeddings as ground cost.
pub fn wmd_exact(
    weights_a: &TermWeights,
    weights_b: &TermWeights,
    table: &EmbeddingTable,
) -> Result<(f64, FlowMatrix)> {
    if weights_a.scheme != WeightScheme::Uniform || weights_b.scheme != WeightScheme::Uniform {
        return Err(Error::NonUniformWeights);
    }
    let rows_of = |w: &TermWeights| -> Result<Vec<u32>> {
        w.entries()
            .iter()
            .map(|(t, _)| {
                table
                    .row(t)
                    .ok_or_else(|| Error::OutOfVocabulary(t.clone()))
            })
            .collect()
    };
    let ra = rows_of(weights_a)?;
    let rb = rows_of(weights_b)?;
    let supply: Vec<f64> = weights_a.entries().iter().map(|e| e.1).collect();
    let demand: Vec<f64> = weights_b.entries().iter().map(|e| e.1).collect();
    let cost: Vec<f64> = ra
        .iter()
        .flat_map(|&i| rb.iter().map(move |&j| (i, j)))
        .map(|(i, j)| {
            if i == j {
                0.0
            } else {
                euclidean(table.vector(i), table.vector(j))
            }
        })
        .collect();
    let (total, dense) = solve_transport(&supply, &demand, &cost)?;
    let m = demand.len();
    let entries = dense
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0.0)
        .map(|(k, &f)| (k / m, k % m, f))
        .collect();
    let flow = FlowMatrix::new(
        weights_a.entries().iter().map(|e| e.0.clone()).collect(),
        weights_b.entries().iter().map(|e| e.0.clone()).collect(),
        entries,
    );
    Ok((total, flow))
}
