//! Click-log relevance labeling, TREC-style judgment/run files, and ranking
//! metrics (MAP, NDCG@k).

mod clicks;
mod judgments;
mod metrics;

pub use clicks::{
    aggregate_and_filter, label_queries, read_click_log, relevance_label, AggregateParams,
    ClickRecord, LabelParams, NonInformationalFilter,
};
pub use judgments::{
    read_qrels, read_queries, read_run, write_qrels, write_queries, write_run, JudgedQuery,
    Judgments, Run,
};
pub use metrics::{
    average_precision, discount, evaluate_run, gain, ndcg_at_k, ndcg_of_grades, EvalReport, Metric,
};
