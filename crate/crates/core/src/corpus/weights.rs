use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::index::CorpusIndex;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// Normalized bag of words: `tf_i / sum(tf)`.
    Uniform,
    /// Normalized bag of words scaled by collection idf.
    Idf,
}

/// Per-term weights of a query or document, one entry per unique token,
/// ordered by term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeights {
    pub scheme: WeightScheme,
    entries: Vec<(String, f64)>,
}

impl TermWeights {
    /// Normalized bag-of-words weights; needs no collection statistics.
    pub fn uniform<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let counts = count(tokens)?;
        let total = tokens.len() as f64;
        Ok(TermWeights {
            scheme: WeightScheme::Uniform,
            entries: counts
                .into_iter()
                .map(|(t, tf)| (t.to_string(), tf as f64 / total))
                .collect(),
        })
    }

    /// Builds weights from explicit `(term, weight)` pairs. Duplicate terms are
    /// summed.
    pub fn from_pairs<I, S>(scheme: WeightScheme, pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, f64> = BTreeMap::new();
        for (t, w) in pairs {
            *map.entry(t.into()).or_default() += w;
        }
        TermWeights {
            scheme,
            entries: map.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.entries
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }
}

fn count<S: AsRef<str>>(tokens: &[S]) -> Result<BTreeMap<&str, u32>> {
    if tokens.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Weights for `tokens` under `scheme`; the idf scheme reads collection
/// statistics from `index` (unseen terms count as document frequency 0).
pub fn term_weights<S: AsRef<str>>(
    tokens: &[S],
    index: &CorpusIndex,
    scheme: WeightScheme,
) -> Result<TermWeights> {
    match scheme {
        WeightScheme::Uniform => TermWeights::uniform(tokens),
        WeightScheme::Idf => {
            let counts = count(tokens)?;
            let total = tokens.len() as f64;
            let entries = counts
                .into_iter()
                .map(|(t, tf)| Ok((t.to_string(), index.idf(t)? * tf as f64 / total)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TermWeights { scheme, entries })
        }
    }
}
