use crate::corpus::{term_weights, CorpusIndex, Field, TermId, WeightScheme};
use crate::embeddings::{centroid_of_rows, cosine_dense, EmbeddingTable};
use crate::scoring::{FlowMatrix, Match, ScoredDoc};
use crate::Result;

const OOV: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct SemTerm {
    text: String,
    weight: f64,
    row: Option<u32>,
    term_id: Option<TermId>,
}

/// A query prepared for semantic scoring: unique terms with idf-scaled
/// normalized weights, resolved against the index and the embedding table.
#[derive(Clone, Debug)]
pub struct SemQuery {
    terms: Vec<SemTerm>,
}

impl SemQuery {
    pub fn new<S: AsRef<str>>(
        tokens: &[S],
        index: &CorpusIndex,
        table: &EmbeddingTable,
    ) -> Result<Self> {
        let weights = term_weights(tokens, index, WeightScheme::Idf)?;
        let terms = weights
            .entries()
            .iter()
            .map(|(t, w)| SemTerm {
                text: t.clone(),
                weight: *w,
                row: table.row(t),
                term_id: index.term_id(t),
            })
            .collect();
        Ok(SemQuery { terms })
    }

    /// `(term, weight)` pairs in term order.
    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms.iter().map(|t| (t.text.as_str(), t.weight))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Semantic scorer with the index vocabulary pre-resolved to embedding rows.
pub struct SemScorer<'a> {
    index: &'a CorpusIndex,
    table: &'a EmbeddingTable,
    rows: Vec<u32>,
}

impl<'a> SemScorer<'a> {
    pub fn new(index: &'a CorpusIndex, table: &'a EmbeddingTable) -> Self {
        let rows = index
            .terms()
            .iter()
            .map(|t| table.row(t).unwrap_or(OOV))
            .collect();
        SemScorer { index, table, rows }
    }

    pub fn index(&self) -> &'a CorpusIndex {
        self.index
    }

    pub fn table(&self) -> &'a EmbeddingTable {
        self.table
    }

    pub fn prepare<S: AsRef<str>>(&self, tokens: &[S]) -> Result<SemQuery> {
        SemQuery::new(tokens, self.index, self.table)
    }

    pub fn score(&self, query: &SemQuery, doc: usize, field: Field) -> ScoredDoc {
        sem_score(query, doc, field, self.index, self.table, |id| {
            match self.rows[id as usize] {
                OOV => None,
                r => Some(r),
            }
        })
    }

    pub fn score_centroid(&self, query_centroid: &[f64], doc: usize, field: Field) -> Result<f64> {
        let rows = self
            .index
            .doc_terms(doc, field)
            .iter()
            .filter(|&&(id, _)| self.rows[id as usize] != OOV)
            .map(|&(id, tf)| (self.rows[id as usize], tf));
        let doc_centroid = centroid_of_rows(self.table, rows)?;
        Ok(cosine_dense(query_centroid, &doc_centroid))
    }
}

fn sem_score<F>(
    query: &SemQuery,
    doc: usize,
    field: Field,
    index: &CorpusIndex,
    table: &EmbeddingTable,
    row_of: F,
) -> ScoredDoc
where
    F: Fn(TermId) -> Option<u32>,
{
    let doc_id = index.doc_id(doc).to_string();
    let doc_terms = index.doc_terms(doc, field);
    if doc_terms.is_empty() {
        return ScoredDoc {
            doc_id,
            score: 0.0,
            matches: Some(Vec::new()),
        };
    }

    // best (cosine, doc term) per query term
    let mut best: Vec<Option<(f64, TermId)>> = vec![None; query.terms.len()];
    for &(id, _) in doc_terms {
        let Some(drow) = row_of(id) else { continue };
        for (slot, q) in best.iter_mut().zip(&query.terms) {
            let Some(qrow) = q.row else { continue };
            let c = table.cosine_rows(qrow, drow);
            let better = match *slot {
                None => true,
                Some((bc, bid)) => c > bc || (c == bc && index.term(id) < index.term(bid)),
            };
            if better {
                *slot = Some((c, id));
            }
        }
    }

    let mut score = 0.0;
    let mut matches = Vec::new();
    for (q, slot) in query.terms.iter().zip(best) {
        match (q.row, slot) {
            (Some(_), Some((c, id))) => {
                score += q.weight * c;
                matches.push(Match {
                    qterm: q.text.clone(),
                    dterm: index.term(id).to_string(),
                    cos: c,
                });
            }
            (Some(_), None) => {}
            (None, _) => {
                // no vector: exact occurrence counts as a perfect match
                let present = q
                    .term_id
                    .is_some_and(|id| doc_terms.binary_search_by_key(&id, |&(t, _)| t).is_ok());
                if present {
                    score += q.weight;
                }
            }
        }
    }
    ScoredDoc {
        doc_id,
        score,
        matches: Some(matches),
    }
}

/// Relaxed query-to-document transport similarity: each idf-weighted query term
/// flows entirely to its most similar document term.
pub fn score_sem<S: AsRef<str>>(
    query_tokens: &[S],
    doc: usize,
    table: &EmbeddingTable,
    index: &CorpusIndex,
    field: Field,
) -> Result<ScoredDoc> {
    let query = SemQuery::new(query_tokens, index, table)?;
    Ok(sem_score(&query, doc, field, index, table, |id| {
        table.row(index.term(id))
    }))
}

/// The flow realizing a semantic score: each matched query term sends its whole
/// weight to its matched document term.
pub fn greedy_flow(query: &SemQuery, scored: &ScoredDoc) -> FlowMatrix {
    let matches = scored.matches.as_deref().unwrap_or_default();
    let rows: Vec<String> = matches.iter().map(|m| m.qterm.clone()).collect();
    let mut cols: Vec<String> = matches.iter().map(|m| m.dterm.clone()).collect();
    cols.sort();
    cols.dedup();
    let entries = matches
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let w = query
                .weights()
                .find(|(t, _)| *t == m.qterm)
                .map(|(_, w)| w)
                .unwrap_or(0.0);
            let j = cols.binary_search(&m.dterm).unwrap();
            (i, j, w)
        })
        .collect();
    FlowMatrix::new(rows, cols, entries)
}

/// Cosine between the query centroid and the centroid of the document field.
pub fn score_centroid<S: AsRef<str>>(
    query_tokens: &[S],
    doc: usize,
    table: &EmbeddingTable,
    index: &CorpusIndex,
    field: Field,
) -> Result<f64> {
    score_centroid_with(query_tokens, doc, table, index, field, true)
}

pub fn score_centroid_with<S: AsRef<str>>(
    query_tokens: &[S],
    doc: usize,
    table: &EmbeddingTable,
    index: &CorpusIndex,
    field: Field,
    multiplicity: bool,
) -> Result<f64> {
    let q = crate::embeddings::centroid_with(table, query_tokens, multiplicity)?;
    let rows = index.doc_terms(doc, field).iter().filter_map(|&(id, tf)| {
        table
            .row(index.term(id))
            .map(|r| (r, if multiplicity { tf } else { 1 }))
    });
    let d = centroid_of_rows(table, rows)?;
    Ok(cosine_dense(&q, &d))
}
