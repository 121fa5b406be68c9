use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, Field, TermId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k: 1.9, b: 1.0 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::invalid(
                "bm25 k",
                format!("{} (must be > 0)", self.k),
            ));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::invalid(
                "bm25 b",
                format!("{} (must be in [0, 1])", self.b),
            ));
        }
        Ok(())
    }
}

/// Unique query terms with their query frequency, sorted by term.
pub(crate) fn query_counts<S: AsRef<str>>(tokens: &[S]) -> Result<BTreeMap<&str, u32>> {
    if tokens.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Cosine between the tf-idf vectors of the query and the document (both fields).
pub fn score_tfidf<S: AsRef<str>>(
    query_tokens: &[S],
    doc: usize,
    index: &CorpusIndex,
) -> Result<f64> {
    let counts = query_counts(query_tokens)?;
    let doc_terms = index.doc_terms(doc, Field::Both);

    let mut dot = 0.0;
    let mut q_norm = 0.0;
    for (term, qtf) in counts {
        let idf = index.idf(term)?;
        let wq = qtf as f64 * idf;
        q_norm += wq * wq;
        if let Some(id) = index.term_id(term) {
            let tf = index.tf(doc, Field::Both, id);
            if tf > 0 {
                dot += wq * tf as f64 * idf;
            }
        }
    }
    let mut d_norm = 0.0;
    for &(id, tf) in doc_terms {
        let wd = tf as f64 * index.idf_by_id(id)?;
        d_norm += wd * wd;
    }
    if dot == 0.0 || q_norm == 0.0 || d_norm == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (q_norm.sqrt() * d_norm.sqrt()))
}

/// Okapi BM25 over the selected field(s), with the collection idf.
pub fn score_bm25<S: AsRef<str>>(
    query_tokens: &[S],
    doc: usize,
    index: &CorpusIndex,
    params: Bm25Params,
    field: Field,
) -> Result<f64> {
    let ids = lexical_ids(query_tokens, index)?;
    bm25_for_ids(&ids, doc, index, params, field)
}

/// Index ids of the unique query terms that occur in the collection.
pub(crate) fn lexical_ids<S: AsRef<str>>(tokens: &[S], index: &CorpusIndex) -> Result<Vec<TermId>> {
    let counts = query_counts(tokens)?;
    Ok(counts.keys().filter_map(|t| index.term_id(t)).collect())
}

pub(crate) fn bm25_for_ids(
    ids: &[TermId],
    doc: usize,
    index: &CorpusIndex,
    params: Bm25Params,
    field: Field,
) -> Result<f64> {
    let avgdl = index.avg_len(field);
    let norm = if avgdl > 0.0 {
        1.0 - params.b + params.b * index.doc_len(doc, field) as f64 / avgdl
    } else {
        1.0
    };
    let mut score = 0.0;
    for &id in ids {
        let tf = index.tf(doc, field, id);
        if tf == 0 {
            continue;
        }
        let tf = tf as f64;
        score += index.idf_by_id(id)? * tf * (params.k + 1.0) / (tf + params.k * norm);
    }
    Ok(score)
}
