//! Learning to rank: feature extraction, LambdaMART training, model files and
//! reranking.

mod data;
mod features;
mod lambdamart;
mod model;

pub use data::{read_letor, split_queries, write_letor, TrainingInstance};
pub use features::{
    extract_features, FeatureConfig, FeatureExtractor, FeatureKind, FeatureSchema, FeatureVector,
};
pub use lambdamart::{train_lambdamart, LtrHyperparams};
pub use model::{predict, rerank, Candidate, Node, RankingModel};
