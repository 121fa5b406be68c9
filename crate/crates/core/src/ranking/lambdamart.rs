use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::TrainingInstance;
use super::features::FeatureSchema;
use super::model::{Node, RankingModel};
use crate::releval::{discount, gain};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtrHyperparams {
    pub num_trees: usize,
    pub num_leaves: usize,
    pub learning_rate: f64,
    pub min_instances_per_leaf: usize,
    /// Truncation of the NDCG used to weight lambda gradients.
    pub ndcg_k: usize,
    /// Upper bound on candidate split thresholds per feature.
    pub max_thresholds: usize,
    /// Recorded with the model. Training itself draws no random numbers, so
    /// the same data always gives the same trees.
    pub rng_seed: u64,
}

impl Default for LtrHyperparams {
    fn default() -> Self {
        LtrHyperparams {
            num_trees: 300,
            num_leaves: 10,
            learning_rate: 0.1,
            min_instances_per_leaf: 1,
            ndcg_k: 10,
            max_thresholds: 256,
            rng_seed: 7,
        }
    }
}

impl LtrHyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_trees", self.num_trees),
            ("num_leaves", self.num_leaves),
            ("min_instances_per_leaf", self.min_instances_per_leaf),
            ("ndcg_k", self.ndcg_k),
            ("max_thresholds", self.max_thresholds),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(
                    "hyperparameter",
                    format!("{name} must be positive"),
                ));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(
                "hyperparameter",
                "learning_rate must be positive",
            ));
        }
        Ok(())
    }
}

/// Candidate thresholds and per-instance bin of one feature. An instance is in
/// bin `b` when its value is `<= thresholds[b]` and `> thresholds[b - 1]`.
struct BinnedFeature {
    thresholds: Vec<f64>,
    bins: Vec<u32>,
}

impl BinnedFeature {
    fn new(values: &[f64], max_thresholds: usize) -> Self {
        let mut unique = values.to_vec();
        unique.sort_by(f64::total_cmp);
        unique.dedup();
        let thresholds = if unique.len() <= max_thresholds {
            unique
        } else {
            // evenly spaced order statistics, always keeping the maximum
            let last = unique.len() - 1;
            let mut t: Vec<f64> = (1..=max_thresholds)
                .map(|i| unique[i * last / max_thresholds])
                .collect();
            t.dedup();
            t
        };
        let bins = values
            .iter()
            .map(|&v| thresholds.partition_point(|&t| t < v) as u32)
            .collect();
        BinnedFeature { thresholds, bins }
    }
}

#[derive(Clone, Copy, Debug)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

enum ArenaNode {
    Leaf(Vec<u32>),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct TreeBuilder<'a> {
    features: &'a [BinnedFeature],
    targets: &'a [f64],
    min_leaf: usize,
}

impl TreeBuilder<'_> {
    fn best_split(&self, members: &[u32]) -> Option<SplitCandidate> {
        let n = members.len();
        if n < 2 * self.min_leaf {
            return None;
        }
        let total: f64 = members.iter().map(|&i| self.targets[i as usize]).sum();
        let parent = total * total / n as f64;
        let mut best: Option<SplitCandidate> = None;
        for (f, feat) in self.features.iter().enumerate() {
            let nb = feat.thresholds.len();
            if nb < 2 {
                continue;
            }
            let mut sum = vec![0.0; nb];
            let mut cnt = vec![0usize; nb];
            for &i in members {
                let b = feat.bins[i as usize] as usize;
                sum[b] += self.targets[i as usize];
                cnt[b] += 1;
            }
            let (mut ls, mut lc) = (0.0, 0usize);
            for b in 0..nb - 1 {
                ls += sum[b];
                lc += cnt[b];
                let rc = n - lc;
                if lc < self.min_leaf {
                    continue;
                }
                if rc < self.min_leaf {
                    break;
                }
                if cnt[b] == 0 {
                    continue;
                }
                let rs = total - ls;
                let gain = ls * ls / lc as f64 + rs * rs / rc as f64 - parent;
                if gain > best.map_or(1e-12, |c| c.gain) {
                    best = Some(SplitCandidate {
                        gain,
                        feature: f,
                        bin: b,
                    });
                }
            }
        }
        best
    }

    /// Grows a tree leaf by leaf, always splitting the leaf with the largest
    /// variance reduction, until `max_leaves` or no leaf can split.
    fn grow(&self, all: Vec<u32>, max_leaves: usize) -> Vec<ArenaNode> {
        let mut arena = Vec::new();
        let mut open: Vec<(usize, SplitCandidate)> = Vec::new();
        if let Some(c) = self.best_split(&all) {
            open.push((0, c));
        }
        arena.push(ArenaNode::Leaf(all));
        let mut leaves = 1;
        while leaves < max_leaves && !open.is_empty() {
            let pick = open
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    a.1 .1
                        .gain
                        .total_cmp(&b.1 .1.gain)
                        .then(b.1 .0.cmp(&a.1 .0))
                })
                .map(|(i, _)| i)
                .unwrap();
            let (node, cand) = open.swap_remove(pick);
            let ArenaNode::Leaf(members) =
                std::mem::replace(&mut arena[node], ArenaNode::Leaf(Vec::new()))
            else {
                unreachable!("open nodes are leaves");
            };
            let feat = &self.features[cand.feature];
            let (left, right): (Vec<u32>, Vec<u32>) = members
                .into_iter()
                .partition(|&i| feat.bins[i as usize] as usize <= cand.bin);
            let (li, ri) = (arena.len(), arena.len() + 1);
            if let Some(c) = self.best_split(&left) {
                open.push((li, c));
            }
            if let Some(c) = self.best_split(&right) {
                open.push((ri, c));
            }
            arena.push(ArenaNode::Leaf(left));
            arena.push(ArenaNode::Leaf(right));
            arena[node] = ArenaNode::Split {
                feature: cand.feature,
                threshold: feat.thresholds[cand.bin],
                left: li,
                right: ri,
            };
            leaves += 1;
        }
        arena
    }
}

fn to_tree(arena: &[ArenaNode], at: usize, leaf_values: &[f64], leaf_slot: &[usize]) -> Node {
    match &arena[at] {
        ArenaNode::Leaf(_) => Node::leaf(leaf_values[leaf_slot[at]]),
        ArenaNode::Split {
            feature,
            threshold,
            left,
            right,
        } => Node::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(to_tree(arena, *left, leaf_values, leaf_slot)),
            right: Box::new(to_tree(arena, *right, leaf_values, leaf_slot)),
        },
    }
}

struct QueryGroup {
    members: Vec<usize>,
    ideal_dcg: f64,
}

/// Lambda gradients and their second-order weights for one query, given
/// current scores. Only pairs with at least one document in the top `k` carry
/// an NDCG change.
fn query_lambdas(
    group: &QueryGroup,
    scores: &[f64],
    labels: &[f64],
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = group.members.len();
    let mut lambdas = vec![0.0; n];
    let mut weights = vec![0.0; n];
    if group.ideal_dcg == 0.0 {
        return (lambdas, weights);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[group.members[b]]
            .total_cmp(&scores[group.members[a]])
            .then(a.cmp(&b))
    });
    let disc = |rank0: usize| if rank0 < k { discount(rank0 + 1) } else { 0.0 };
    for p in 0..n.min(k) {
        let i = order[p];
        let yi = labels[group.members[i]];
        for (q, &j) in order.iter().enumerate().skip(p + 1) {
            let yj = labels[group.members[j]];
            if yi == yj {
                continue;
            }
            let (hi, lo) = if yi > yj { (i, j) } else { (j, i) };
            let delta = ((gain(yi) - gain(yj)) * (disc(p) - disc(q))).abs() / group.ideal_dcg;
            let diff = scores[group.members[hi]] - scores[group.members[lo]];
            let rho = 1.0 / (1.0 + diff.exp());
            lambdas[hi] += rho * delta;
            lambdas[lo] -= rho * delta;
            let w = rho * (1.0 - rho) * delta;
            weights[hi] += w;
            weights[lo] += w;
        }
    }
    (lambdas, weights)
}

fn validate_data(schema: &FeatureSchema, data: &[TrainingInstance]) -> Result<()> {
    for inst in data {
        if inst.features.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: schema.describe(),
                found: format!(
                    "{} values for `{}`/`{}`",
                    inst.features.len(),
                    inst.query_id,
                    inst.doc_id
                ),
            });
        }
        if inst.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                query_id: inst.query_id.clone(),
                doc_id: inst.doc_id.clone(),
            });
        }
        if !(inst.label.is_finite() && inst.label >= 0.0) {
            return Err(Error::invalid(
                "label",
                format!("{} for `{}`/`{}`", inst.label, inst.query_id, inst.doc_id),
            ));
        }
    }
    Ok(())
}

fn group_by_query(data: &[TrainingInstance], k: usize) -> Vec<QueryGroup> {
    let mut order: Vec<&str> = Vec::new();
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, inst) in data.iter().enumerate() {
        let g = *index.entry(inst.query_id.as_str()).or_insert_with(|| {
            order.push(inst.query_id.as_str());
            members.push(Vec::new());
            members.len() - 1
        });
        members[g].push(i);
    }
    members
        .into_iter()
        .map(|m| {
            let mut labels: Vec<f64> = m.iter().map(|&i| data[i].label).collect();
            labels.sort_by(|a, b| b.total_cmp(a));
            let ideal_dcg = labels
                .iter()
                .take(k)
                .enumerate()
                .map(|(r, &y)| gain(y) * discount(r + 1))
                .sum();
            QueryGroup {
                members: m,
                ideal_dcg,
            }
        })
        .collect()
}

fn has_preference_pair(group: &QueryGroup, labels: &[f64]) -> bool {
    let first = labels[group.members[0]];
    group.members.iter().any(|&i| labels[i] != first)
}

/// Trains a LambdaMART ensemble: each boosting round computes NDCG-weighted
/// pairwise lambda gradients per query, fits a least-squares regression tree to
/// them, and sets each leaf to a Newton step `sum(lambda) / sum(weight)`.
pub fn train_lambdamart(
    schema: &FeatureSchema,
    data: &[TrainingInstance],
    hp: &LtrHyperparams,
) -> Result<RankingModel> {
    hp.validate()?;
    validate_data(schema, data)?;
    // Canonical order makes the model independent of input row order; the
    // stable sort keeps duplicate (query, doc) rows in input order.
    let mut canonical: Vec<TrainingInstance> = data.to_vec();
    canonical.sort_by(|a, b| {
        (a.query_id.as_str(), a.doc_id.as_str()).cmp(&(b.query_id.as_str(), b.doc_id.as_str()))
    });
    let data = canonical.as_slice();
    let labels: Vec<f64> = data.iter().map(|d| d.label).collect();
    let groups = group_by_query(data, hp.ndcg_k);
    if !groups.iter().any(|g| has_preference_pair(g, &labels)) {
        return Err(Error::NoPreferencePairs);
    }

    let features: Vec<BinnedFeature> = (0..schema.len())
        .map(|f| {
            let col: Vec<f64> = data.iter().map(|d| d.features[f]).collect();
            BinnedFeature::new(&col, hp.max_thresholds)
        })
        .collect();

    let n = data.len();
    let mut scores = vec![0.0; n];
    let mut lambdas = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut model = RankingModel::new(schema.clone(), *hp);

    for _ in 0..hp.num_trees {
        let per_group: Vec<(Vec<f64>, Vec<f64>)> = groups
            .par_iter()
            .map(|g| query_lambdas(g, &scores, &labels, hp.ndcg_k))
            .collect();
        for (g, (l, w)) in groups.iter().zip(per_group) {
            for (slot, &i) in g.members.iter().enumerate() {
                lambdas[i] = l[slot];
                weights[i] = w[slot];
            }
        }

        let builder = TreeBuilder {
            features: &features,
            targets: &lambdas,
            min_leaf: hp.min_instances_per_leaf,
        };
        let arena = builder.grow((0..n as u32).collect(), hp.num_leaves);

        let mut leaf_slot = vec![usize::MAX; arena.len()];
        let mut leaf_values = Vec::new();
        for (at, node) in arena.iter().enumerate() {
            if let ArenaNode::Leaf(members) = node {
                let num: f64 = members.iter().map(|&i| lambdas[i as usize]).sum();
                let den: f64 = members.iter().map(|&i| weights[i as usize]).sum();
                let value = if den == 0.0 { 0.0 } else { num / den };
                leaf_slot[at] = leaf_values.len();
                leaf_values.push(value);
                for &i in members {
                    scores[i as usize] += hp.learning_rate * value;
                }
            }
        }
        model
            .trees
            .push(to_tree(&arena, 0, &leaf_values, &leaf_slot));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::releval::ndcg_of_grades;

    fn inst(q: &str, d: &str, f: &[f64], y: f64) -> TrainingInstance {
        TrainingInstance {
            query_id: q.into(),
            doc_id: d.into(),
            features: f.to_vec(),
            label: y,
        }
    }

    fn quick() -> LtrHyperparams {
        LtrHyperparams {
            num_trees: 20,
            ..Default::default()
        }
    }

    #[test]
    fn separable_pair() {
        let schema = FeatureSchema::anonymous(1);
        let data = [inst("q", "d1", &[1.0], 1.0), inst("q", "d2", &[0.0], 0.0)];
        let m = train_lambdamart(&schema, &data, &quick()).unwrap();
        assert!(m.score(&[1.0]) > m.score(&[0.0]));
        let ranked: Vec<f64> = {
            let mut d = data.to_vec();
            d.sort_by(|a, b| m.score(&b.features).total_cmp(&m.score(&a.features)));
            d.iter().map(|i| i.label).collect()
        };
        assert_eq!(ndcg_of_grades(&ranked, 10), 1.0);
    }

    #[test]
    fn constant_feature_gives_constant_model() {
        let schema = FeatureSchema::anonymous(1);
        let data = [
            inst("q", "a", &[3.0], 0.0),
            inst("q", "b", &[3.0], 2.0),
            inst("q", "c", &[3.0], 1.0),
        ];
        let m = train_lambdamart(&schema, &data, &quick()).unwrap();
        let s = m.score(&[3.0]);
        assert_eq!(s, m.score(&[-100.0]));
        assert_eq!(s, m.score(&[100.0]));
        assert!(m.trees.iter().all(|t| t.num_leaves() == 1));
    }

    #[test]
    fn error_cases() {
        let schema = FeatureSchema::anonymous(1);
        let flat = [inst("q", "a", &[1.0], 1.0), inst("q", "b", &[2.0], 1.0)];
        assert!(matches!(
            train_lambdamart(&schema, &flat, &quick()),
            Err(Error::NoPreferencePairs)
        ));
        let nan = [
            inst("q", "a", &[f64::NAN], 1.0),
            inst("q", "b", &[2.0], 0.0),
        ];
        match train_lambdamart(&schema, &nan, &quick()) {
            Err(Error::NonFiniteFeature { doc_id, .. }) => assert_eq!(doc_id, "a"),
            other => panic!("unexpected {other:?}"),
        }
        let wide = [inst("q", "a", &[1.0, 2.0], 1.0)];
        assert!(matches!(
            train_lambdamart(&schema, &wide, &quick()),
            Err(Error::SchemaMismatch { .. })
        ));
        let bad_hp = LtrHyperparams {
            num_leaves: 0,
            ..quick()
        };
        assert!(train_lambdamart(&schema, &flat, &bad_hp).is_err());
    }

    #[test]
    fn respects_leaf_budget_and_min_leaf() {
        let schema = FeatureSchema::anonymous(1);
        let data: Vec<_> = (0..40)
            .map(|i| {
                inst(
                    &format!("q{}", i / 10),
                    &format!("d{i}"),
                    &[i as f64],
                    (i % 3) as f64,
                )
            })
            .collect();
        let hp = LtrHyperparams {
            num_trees: 5,
            num_leaves: 4,
            min_instances_per_leaf: 5,
            ..Default::default()
        };
        let m = train_lambdamart(&schema, &data, &hp).unwrap();
        assert!(m.trees.iter().all(|t| t.num_leaves() <= 4));
    }

    #[test]
    fn binning_keeps_maximum() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let b = BinnedFeature::new(&values, 16);
        assert_eq!(*b.thresholds.last().unwrap(), 999.0);
        for (v, &bin) in values.iter().zip(&b.bins) {
            let t = &b.thresholds;
            assert!(*v <= t[bin as usize]);
            if bin > 0 {
                assert!(*v > t[bin as usize - 1]);
            }
        }
    }

    #[test]
    fn training_scores_match_predict() {
        let schema = FeatureSchema::anonymous(2);
        let data: Vec<_> = (0..60)
            .map(|i| {
                let x = (i * 37 % 17) as f64 / 17.0;
                let z = (i * 11 % 13) as f64 / 13.0;
                inst(
                    &format!("q{}", i / 12),
                    &format!("d{i}"),
                    &[x, z],
                    if x + z > 1.0 { 1.0 } else { 0.0 },
                )
            })
            .collect();
        let m = train_lambdamart(&schema, &data, &quick()).unwrap();
        let again = train_lambdamart(&schema, &data, &quick()).unwrap();
        assert_eq!(m.to_json().unwrap(), again.to_json().unwrap());
    }
}
