//! Tokenization, collection statistics and term weighting.

mod index;
mod tokenize;
mod weights;

pub use index::{
    build_index, idf, idf_value, read_documents, CorpusIndex, DfSource, Document, Field,
    FieldCounts, IdfOptions, IndexBuilder, Posting, TermId,
};
pub use tokenize::{default_stopwords, read_stopwords, tokenize, TokenConfig};
pub use weights::{term_weights, TermWeights, WeightScheme};
