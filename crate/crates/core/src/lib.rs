//! Query-document ranking with word embeddings.
//!
//! The central scorer ([`scoring::score_sem`]) matches every idf-weighted query
//! term to its most similar document term in embedding space. That is the
//! closed-form optimum of a query-to-document transport problem in which only
//! the query side carries mass constraints. Around it sit the usual baselines
//! (TF-IDF, BM25, embedding centroids), an exact Word Mover's Distance solver
//! used as a test oracle, a LambdaMART reranker that fuses BM25 with the
//! semantic score, click-log relevance labeling, and MAP/NDCG evaluation.

pub mod corpus;
pub mod embeddings;
mod error;
pub mod ranking;
pub mod releval;
pub mod scoring;
pub mod search;
pub mod synth;

pub use corpus::{
    build_index, idf, term_weights, tokenize, CorpusIndex, DfSource, Document, Field, IdfOptions,
    TermWeights, TokenConfig, WeightScheme,
};
pub use embeddings::{centroid, cosine, EmbeddingFormat, EmbeddingTable};
pub use error::{Error, Result};
pub use ranking::{
    extract_features, predict, rerank, train_lambdamart, FeatureSchema, FeatureVector,
    LtrHyperparams, RankingModel, TrainingInstance,
};
pub use releval::{
    average_precision, evaluate_run, ndcg_at_k, relevance_label, ClickRecord, JudgedQuery,
    LabelParams, Metric,
};
pub use scoring::{
    score_bm25, score_centroid, score_sem, score_tfidf, wmd_exact, Bm25Params, FlowMatrix, Match,
    ScoredDoc,
};
pub use search::{CandidateSet, ScorerKind, SearchConfig, SearchEngine};
