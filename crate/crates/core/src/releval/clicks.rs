use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::judgments::JudgedQuery;
use crate::{Error, Result};

/// Aggregated user actions for one (query, document) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickRecord {
    pub query: String,
    pub doc_id: String,
    pub abstract_clicks: u64,
    pub fulltext_clicks: u64,
    pub has_fulltext: bool,
    pub query_occurrences: u64,
    pub results_returned: u64,
}

impl ClickRecord {
    pub fn validate(&self) -> Result<()> {
        if self.fulltext_clicks > 0 && !self.has_fulltext {
            return Err(Error::FullTextWithoutLink(self.doc_id.clone()));
        }
        Ok(())
    }
}

/// Weights of the click-based relevance label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelParams {
    /// Trade-off between abstract clicks and full-text clicks.
    pub mu: f64,
    /// Divisor of the boost for documents without a full-text link.
    pub lambda_boost: f64,
}

impl Default for LabelParams {
    fn default() -> Self {
        LabelParams {
            mu: 0.33,
            lambda_boost: 15.0,
        }
    }
}

impl LabelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::invalid(
                "mu",
                format!("{} (must be in [0, 1])", self.mu),
            ));
        }
        if !(self.lambda_boost > 0.0 && self.lambda_boost.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("{} (must be > 0)", self.lambda_boost),
            ));
        }
        Ok(())
    }
}

/// `y = mu*a + (1 - mu)*f + (a / lambda)*(1 - FT)`.
pub fn relevance_label(
    abstract_clicks: u64,
    fulltext_clicks: u64,
    has_fulltext: bool,
    p: LabelParams,
) -> Result<f64> {
    p.validate()?;
    if fulltext_clicks > 0 && !has_fulltext {
        return Err(Error::invalid(
            "click counts",
            "full-text clicks without a full-text link",
        ));
    }
    let a = abstract_clicks as f64;
    let f = fulltext_clicks as f64;
    let boost = if has_fulltext {
        0.0
    } else {
        a / p.lambda_boost
    };
    Ok(p.mu * a + (1.0 - p.mu) * f + boost)
}

/// Parses the tab-separated click log:
/// `query, doc_id, abstract_clicks, fulltext_clicks, has_fulltext, query_occurrences, results_returned`.
pub fn read_click_log<R: BufRead>(reader: R) -> Result<Vec<ClickRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(Error::format(
                i + 1,
                format!("expected 7 tab-separated fields, found {}", fields.len()),
            ));
        }
        let count = |k: usize, what: &str| -> Result<u64> {
            fields[k]
                .trim()
                .parse()
                .map_err(|_| Error::format(i + 1, format!("bad {what} `{}`", fields[k])))
        };
        let has_fulltext = match fields[4].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::format(
                    i + 1,
                    format!("has_fulltext must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let record = ClickRecord {
            query: fields[0].to_string(),
            doc_id: fields[1].trim().to_string(),
            abstract_clicks: count(2, "abstract_clicks")?,
            fulltext_clicks: count(3, "fulltext_clicks")?,
            has_fulltext,
            query_occurrences: count(5, "query_occurrences")?,
            results_returned: count(6, "results_returned")?,
        };
        record
            .validate()
            .map_err(|e| Error::format(i + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateParams {
    pub min_occurrences: u64,
    pub min_results: u64,
}

impl Default for AggregateParams {
    fn default() -> Self {
        AggregateParams {
            min_occurrences: 10,
            min_results: 20,
        }
    }
}

/// Flags navigational queries that name an author or a journal rather than
/// describing an information need.
#[derive(Clone, Debug)]
pub struct NonInformationalFilter {
    patterns: Vec<Regex>,
    names: HashSet<String>,
}

const JOURNALS: &[&str] = &[
    "nature",
    "science",
    "cell",
    "lancet",
    "the lancet",
    "jama",
    "bmj",
    "plos one",
    "j biol chem",
    "n engl j med",
    "nejm",
    "proc natl acad sci u s a",
    "pnas",
    "nucleic acids res",
    "bioinformatics",
    "sci rep",
    "nat commun",
    "cochrane database syst rev",
];

impl Default for NonInformationalFilter {
    fn default() -> Self {
        let patterns = [
            // "smith j", "smith ja", "o'brien pj"
            r"^[a-z][a-z'\-]+ [a-z]{1,2}$",
            // "smith ja, jones b"
            r"^([a-z][a-z'\-]+ [a-z]{1,2}[,;]? ?){2,}$",
            // explicit field tags
            r"\[(au|author|ta|journal|jour)\]",
        ];
        NonInformationalFilter {
            patterns: patterns.iter().map(|p| Regex::new(p).unwrap()).collect(),
            names: JOURNALS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl NonInformationalFilter {
    /// A filter that flags nothing.
    pub fn none() -> Self {
        NonInformationalFilter {
            patterns: Vec::new(),
            names: HashSet::new(),
        }
    }

    pub fn with_names<I: IntoIterator<Item = String>>(mut self, names: I) -> Self {
        self.names
            .extend(names.into_iter().map(|n| normalize_query(&n)));
        self
    }

    pub fn is_noninformational(&self, query: &str) -> bool {
        let q = normalize_query(query);
        self.names.contains(&q) || self.patterns.iter().any(|p| p.is_match(&q))
    }
}

fn normalize_query(q: &str) -> String {
    q.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Merges duplicate (query, document) rows by summing clicks, then drops
/// queries seen fewer than `min_occurrences` times, queries that returned fewer
/// than `min_results` documents, and queries flagged by `is_noninformational`.
/// Query text is compared after lowercasing and whitespace collapsing; output is
/// ordered by query then document.
pub fn aggregate_and_filter<I, F>(
    records: I,
    params: AggregateParams,
    is_noninformational: F,
) -> Vec<ClickRecord>
where
    I: IntoIterator<Item = ClickRecord>,
    F: Fn(&str) -> bool,
{
    let mut merged: BTreeMap<(String, String), ClickRecord> = BTreeMap::new();
    let mut per_query: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for r in records {
        let query = normalize_query(&r.query);
        let stats = per_query.entry(query.clone()).or_default();
        stats.0 = stats.0.max(r.query_occurrences);
        stats.1 = stats.1.max(r.results_returned);
        merged
            .entry((query.clone(), r.doc_id.clone()))
            .and_modify(|m| {
                m.abstract_clicks += r.abstract_clicks;
                m.fulltext_clicks += r.fulltext_clicks;
                m.has_fulltext |= r.has_fulltext;
            })
            .or_insert(ClickRecord { query, ..r });
    }
    let keep: BTreeMap<String, (u64, u64)> = per_query
        .into_iter()
        .filter(|(q, (occ, res))| {
            *occ >= params.min_occurrences && *res >= params.min_results && !is_noninformational(q)
        })
        .collect();
    merged
        .into_values()
        .filter_map(|mut r| {
            let &(occ, res) = keep.get(&r.query)?;
            r.query_occurrences = occ;
            r.results_returned = res;
            Some(r)
        })
        .collect()
}

/// Labels aggregated records, one [`JudgedQuery`] per distinct query. Query ids
/// are `q1`, `q2`, ... in query text order.
pub fn label_queries(records: &[ClickRecord], p: LabelParams) -> Result<Vec<JudgedQuery>> {
    let mut by_query: BTreeMap<&str, Vec<&ClickRecord>> = BTreeMap::new();
    for r in records {
        by_query.entry(r.query.as_str()).or_default().push(r);
    }
    by_query
        .into_iter()
        .enumerate()
        .map(|(i, (query, rows))| {
            let grades = rows
                .into_iter()
                .map(|r| {
                    relevance_label(r.abstract_clicks, r.fulltext_clicks, r.has_fulltext, p)
                        .map(|y| (r.doc_id.clone(), y))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(JudgedQuery::new(format!("q{}", i + 1), query, grades))
        })
        .collect()
}
