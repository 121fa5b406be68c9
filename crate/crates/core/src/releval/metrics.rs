use std::collections::HashSet;

use super::judgments::{JudgedQuery, Judgments, Run};
use crate::{Error, Result};

/// Graded gain `2^y - 1`.
#[inline]
pub fn gain(grade: f64) -> f64 {
    grade.exp2() - 1.0
}

/// Rank discount `1 / log2(rank + 1)` for a 1-based rank.
#[inline]
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

fn dcg<I: IntoIterator<Item = f64>>(grades: I, k: usize) -> f64 {
    grades
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(r, y)| gain(y) * discount(r + 1))
        .sum()
}

fn ideal_dcg(mut grades: Vec<f64>, k: usize) -> f64 {
    grades.sort_by(|a, b| b.total_cmp(a));
    dcg(grades, k)
}

/// NDCG@k of grades listed in ranked order, normalized by the ideal ordering of
/// the same grades. Returns 0 when every grade is 0.
pub fn ndcg_of_grades(ranked_grades: &[f64], k: usize) -> f64 {
    let ideal = ideal_dcg(ranked_grades.to_vec(), k);
    if ideal == 0.0 {
        return 0.0;
    }
    dcg(ranked_grades.iter().copied(), k) / ideal
}

fn condense<'a, S: AsRef<str>>(ranked: &'a [S], judged: &JudgedQuery) -> Vec<&'a str> {
    ranked
        .iter()
        .map(AsRef::as_ref)
        .filter(|d| judged.is_judged(d))
        .collect()
}

/// Mean of the precisions at the ranks holding relevant documents (grade > 0),
/// divided over all relevant documents of the query. `None` when the query has
/// no relevant documents. With `judged_only`, unjudged documents are removed
/// from the ranking first.
pub fn average_precision<S: AsRef<str>>(
    ranked: &[S],
    judged: &JudgedQuery,
    judged_only: bool,
) -> Option<f64> {
    let total_relevant = judged.num_relevant();
    if total_relevant == 0 {
        return None;
    }
    let docs: Vec<&str> = if judged_only {
        condense(ranked, judged)
    } else {
        ranked.iter().map(AsRef::as_ref).collect()
    };
    let mut seen = HashSet::new();
    let mut hits = 0usize;
    let mut sum = 0.0;
    let mut rank = 0usize;
    for d in docs {
        if !seen.insert(d) {
            continue;
        }
        rank += 1;
        if judged.is_relevant(d) {
            hits += 1;
            sum += hits as f64 / rank as f64;
        }
    }
    Some(sum / total_relevant as f64)
}

/// NDCG@k with graded gains; unjudged documents contribute zero gain and the
/// ideal ordering uses every judged document.
pub fn ndcg_at_k<S: AsRef<str>>(ranked: &[S], judged: &JudgedQuery, k: usize) -> f64 {
    let ideal = ideal_dcg(judged.grades().values().copied().collect(), k);
    if ideal == 0.0 {
        return 0.0;
    }
    let mut seen = HashSet::new();
    let grades = ranked
        .iter()
        .map(AsRef::as_ref)
        .filter(|d| seen.insert(*d))
        .map(|d| judged.grade(d).unwrap_or(0.0));
    dcg(grades, k) / ideal
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Map,
    Ndcg(usize),
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "map" || s == "ap" {
            return Ok(Metric::Map);
        }
        if let Some(k) = s.strip_prefix("ndcg@") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::invalid("metric", format!("bad cutoff in `{s}`")))?;
            if k == 0 {
                return Err(Error::invalid("metric", "ndcg cutoff must be at least 1"));
            }
            return Ok(Metric::Ndcg(k));
        }
        Err(Error::invalid(
            "metric",
            format!("`{s}` (expected map or ndcg@k)"),
        ))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Map => f.write_str("map"),
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub metrics: Vec<Metric>,
    /// One row per evaluated query, values in `metrics` order.
    pub per_query: Vec<(String, Vec<f64>)>,
    pub mean: Vec<f64>,
    /// Run queries that had no judgments or no relevant documents.
    pub excluded: Vec<String>,
}

impl EvalReport {
    pub fn mean_of(&self, metric: Metric) -> Option<f64> {
        self.metrics
            .iter()
            .position(|m| *m == metric)
            .map(|i| self.mean[i])
    }

    /// Tab-separated report: a header, one row per query, then a `mean` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("qid");
        for m in &self.metrics {
            out.push('\t');
            out.push_str(&m.to_string());
        }
        out.push('\n');
        let mut row = |name: &str, values: &[f64]| {
            out.push_str(name);
            for v in values {
                out.push_str(&format!("\t{v:.4}"));
            }
            out.push('\n');
        };
        for (qid, values) in &self.per_query {
            row(qid, values);
        }
        row("mean", &self.mean);
        out
    }
}

/// Scores every run query that has at least one relevant judged document and
/// averages each metric over those queries. `judged_only` applies condensed-list
/// evaluation to all metrics.
pub fn evaluate_run(
    run: &Run,
    judgments: &Judgments,
    metrics: &[Metric],
    judged_only: bool,
) -> EvalReport {
    let mut per_query = Vec::new();
    let mut excluded = Vec::new();
    for (qid, ranked) in run {
        let Some(judged) = judgments.get(qid) else {
            log::warn!("query `{qid}` has no judgments; excluded");
            excluded.push(qid.clone());
            continue;
        };
        if judged.num_relevant() == 0 {
            log::warn!("query `{qid}` has no relevant documents; excluded");
            excluded.push(qid.clone());
            continue;
        }
        let condensed;
        let ranked: &[String] = if judged_only {
            condensed = condense(ranked, judged)
                .into_iter()
                .map(str::to_string)
                .collect::<Vec<_>>();
            &condensed
        } else {
            ranked
        };
        let values: Vec<f64> = metrics
            .iter()
            .map(|m| match m {
                Metric::Map => average_precision(ranked, judged, false).unwrap_or(0.0),
                Metric::Ndcg(k) => ndcg_at_k(ranked, judged, *k),
            })
            .collect();
        per_query.push((qid.clone(), values));
    }
    let n = per_query.len();
    let mean = (0..metrics.len())
        .map(|i| {
            if n == 0 {
                0.0
            } else {
                per_query.iter().map(|(_, v)| v[i]).sum::<f64>() / n as f64
            }
        })
        .collect();
    EvalReport {
        metrics: metrics.to_vec(),
        per_query,
        mean,
        excluded,
    }
}
