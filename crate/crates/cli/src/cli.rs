use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "semrank",
    version,
    about = "Semantic document ranking: indexing, search, learning to rank and evaluation",
    args_override_self = true,
    propagate_version = true
)]
pub struct Cli {
    /// TOML file with one table per subcommand (e.g. `[search]`) whose keys are
    /// long flag names. Flags on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn", value_name = "LEVEL")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a JSONL corpus and write the binary index.
    Index(IndexArgs),
    /// Load an embedding table and report its shape and coverage.
    EmbedCheck(EmbedCheckArgs),
    /// Rank documents for one query or a query file; writes a TREC run.
    Search(SearchArgs),
    /// Extract LETOR feature files for judged queries.
    Features(FeaturesArgs),
    /// Turn a click log into graded judgments (qrels) and a query file.
    Label(LabelArgs),
    /// Train a LambdaMART model on a LETOR feature file.
    Train(TrainArgs),
    /// Score a TREC run against qrels (MAP, NDCG@k).
    Eval(EvalArgs),
    /// Generate a synthetic corpus with planted synonyms, queries, qrels and embeddings.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Title,
    Abstract,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Tfidf,
    Bm25,
    Centroid,
    Sem,
    Ltr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DfSourceArg {
    Combined,
    Title,
    Abstract,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Corpus: one JSON object per line with "id", "title", "abstract".
    #[arg(long, value_name = "FILE")]
    pub docs: PathBuf,
    /// Output index file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Stopword file, one term per line (replaces the bundled English list).
    #[arg(long, value_name = "FILE", conflicts_with = "no_stopwords")]
    pub stopwords: Option<PathBuf>,
    /// Keep every token.
    #[arg(long)]
    pub no_stopwords: bool,
    /// Keep token case.
    #[arg(long)]
    pub no_lowercase: bool,
    /// Drop tokens shorter than this many characters.
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub min_token_length: usize,
    /// Document frequencies used for idf.
    #[arg(long, value_enum, default_value_t = DfSourceArg::Combined)]
    pub idf_source: DfSourceArg,
    /// Floor negative idf at 0 (ubiquitous terms otherwise score negatively).
    #[arg(long)]
    pub clamp_idf: bool,
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    /// Word embeddings in word2vec text or binary format.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Format of --embeddings.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub embeddings_format: FormatArg,
}

#[derive(Debug, Args)]
pub struct EmbedCheckArgs {
    #[command(flatten)]
    pub emb: EmbeddingArgs,
    /// Report how much of this index's vocabulary has vectors.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
    /// Print the cosine of a word pair, e.g. `--pair wound,ulcer` (repeatable).
    #[arg(long, value_name = "A,B")]
    pub pair: Vec<String>,
}

#[derive(Debug, Args)]
pub struct Bm25Args {
    /// BM25 term-frequency saturation k.
    #[arg(long = "k", default_value_t = 1.9, value_name = "K")]
    pub bm25_k: f64,
    /// BM25 length normalization b.
    #[arg(long = "b", default_value_t = 1.0, value_name = "B")]
    pub bm25_b: f64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Index written by `semrank index`.
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    #[command(flatten)]
    pub emb: EmbeddingArgs,
    /// Model written by `semrank train` (scorer ltr).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Scoring function.
    #[arg(long, value_enum, default_value_t = ScorerArg::Bm25)]
    pub scorer: ScorerArg,
    /// Document field scored by bm25, sem and centroid.
    #[arg(long, value_enum, default_value_t = FieldArg::Both)]
    pub field: FieldArg,
    /// Results per query.
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub top_k: usize,
    /// BM25 candidates handed to sem, centroid and ltr: a count or `all`.
    #[arg(long, default_value = "500", value_name = "N|all")]
    pub candidates: String,
    #[command(flatten)]
    pub bm25: Bm25Args,
    /// Worker threads (0 = one per CPU). Output does not depend on this.
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub threads: usize,
    /// A single query.
    #[arg(
        long,
        value_name = "TEXT",
        conflicts_with = "queries",
        required_unless_present = "queries"
    )]
    pub query: Option<String>,
    /// Query id used with --query.
    #[arg(long, default_value = "q1", value_name = "ID")]
    pub qid: String,
    /// Query file: `qid<TAB>text` per line.
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,
    /// Run file to write (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Run tag (last run-file column; defaults to the scorer name).
    #[arg(long, value_name = "TAG")]
    pub tag: Option<String>,
    /// Write SEM term matches as JSON lines to FILE (`-` for standard error).
    #[arg(long, value_name = "FILE")]
    pub explain: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long, value_name = "FILE")]
    pub index: PathBuf,
    #[command(flatten)]
    pub emb: EmbeddingArgs,
    /// Query file: `qid<TAB>text` per line.
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    /// Graded judgments; unjudged candidates get label 0.
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    /// Comma-separated features from bm25, sem_title, sem_abstract, sem_both.
    #[arg(long, default_value = "bm25,sem_title", value_name = "LIST")]
    pub schema: String,
    /// BM25 candidates per query: a count or `all`.
    #[arg(long, default_value = "500", value_name = "N|all")]
    pub candidates: String,
    #[command(flatten)]
    pub bm25: Bm25Args,
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub threads: usize,
    /// Feature file for the training queries (all queries without --test-out).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Feature file for the held-out queries; enables the query-level split.
    #[arg(long, value_name = "FILE")]
    pub test_out: Option<PathBuf>,
    /// Fraction of queries used for training when splitting.
    #[arg(long, default_value_t = 0.7, value_name = "F")]
    pub train_fraction: f64,
    /// Seed of the query shuffle.
    #[arg(long, default_value_t = 7, value_name = "N")]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Click log TSV: query, doc_id, abstract_clicks, fulltext_clicks,
    /// has_fulltext (0|1), query_occurrences, results_returned.
    #[arg(long, value_name = "FILE")]
    pub clicks: PathBuf,
    /// Output qrels.
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    /// Output query file (`qid<TAB>text`).
    #[arg(long, value_name = "FILE")]
    pub queries: PathBuf,
    /// Weight of abstract clicks against full-text clicks.
    #[arg(long, default_value_t = 0.33, value_name = "MU")]
    pub mu: f64,
    /// Abstract clicks per unit of boost for documents without a full-text link.
    #[arg(long, default_value_t = 15.0, value_name = "LAMBDA")]
    pub lambda: f64,
    /// Drop queries issued fewer times than this.
    #[arg(long, default_value_t = 10, value_name = "N")]
    pub min_occurrences: u64,
    /// Drop queries that returned fewer results than this.
    #[arg(long, default_value_t = 20, value_name = "N")]
    pub min_results: u64,
    /// Keep author- and journal-shaped queries.
    #[arg(long)]
    pub keep_noninformational: bool,
    /// Extra non-informational query strings, one per line.
    #[arg(long, value_name = "FILE")]
    pub noninformational: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training feature file (LETOR format).
    #[arg(long, value_name = "FILE")]
    pub features: PathBuf,
    /// Output model (JSON).
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Boosting rounds.
    #[arg(long, default_value_t = 300, value_name = "N")]
    pub trees: usize,
    /// Leaves per tree.
    #[arg(long, default_value_t = 10, value_name = "N")]
    pub leaves: usize,
    /// Shrinkage applied to every tree.
    #[arg(long, default_value_t = 0.1, value_name = "ETA")]
    pub learning_rate: f64,
    /// Minimum instances per leaf.
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub min_leaf: usize,
    /// NDCG cutoff weighting the lambda gradients.
    #[arg(long, default_value_t = 10, value_name = "K")]
    pub ndcg_k: usize,
    /// Candidate split thresholds per feature.
    #[arg(long, default_value_t = 256, value_name = "N")]
    pub max_thresholds: usize,
    /// Seed recorded in the model; training is deterministic.
    #[arg(long, default_value_t = 7, value_name = "N")]
    pub seed: u64,
    /// Held-out feature file; prints its NDCG@k after training.
    #[arg(long, value_name = "FILE")]
    pub validate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// TREC run file.
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    /// Qrels file.
    #[arg(long, value_name = "FILE")]
    pub qrels: PathBuf,
    /// `map` or `ndcg@K`; repeatable or comma-separated.
    #[arg(
        long,
        default_value = "map",
        value_delimiter = ',',
        value_name = "METRIC"
    )]
    pub metric: Vec<String>,
    /// Drop unjudged documents before scoring (condensed lists).
    #[arg(long)]
    pub judged_only: bool,
    /// Report file (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 5000, value_name = "N")]
    pub docs: usize,
    #[arg(long, default_value_t = 100, value_name = "N")]
    pub queries: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 100, value_name = "D")]
    pub dim: usize,
    #[arg(long, default_value_t = 7, value_name = "N")]
    pub seed: u64,
    /// Format of the written embeddings.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub embeddings_format: FormatArg,
}
