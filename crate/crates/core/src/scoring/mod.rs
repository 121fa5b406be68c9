//! Query-document scorers.
//!
//! All scorers are pure functions of immutable inputs. Documents are addressed
//! by their position in the [`CorpusIndex`](crate::CorpusIndex).

mod lexical;
mod semantic;
mod transport;

use serde::{Deserialize, Serialize};

pub(crate) use lexical::{bm25_for_ids, lexical_ids};
pub use lexical::{score_bm25, score_tfidf, Bm25Params};
pub use semantic::{
    greedy_flow, score_centroid, score_centroid_with, score_sem, SemQuery, SemScorer,
};
pub use transport::{solve_transport, wmd_exact, FlowMatrix};

/// One query term's best document partner in embedding space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub qterm: String,
    pub dterm: String,
    pub cos: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matches: Option<Vec<Match>>,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        ScoredDoc {
            doc_id: doc_id.into(),
            score,
            matches: None,
        }
    }
}

/// Descending score, then ascending doc id.
pub fn sort_scored(docs: &mut [ScoredDoc]) {
    docs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
}
