use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use semrank::ranking::Candidate;
use semrank::{rerank, CandidateSet, EmbeddingFormat, EmbeddingTable, RankingModel, ScorerKind};
use semrank::{CorpusIndex, SearchConfig, SearchEngine};
use tempfile::TempDir;

fn semrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let out = semrank(args);
    assert_eq!(code(&out), 0, "{args:?} failed: {}", stderr(&out));
    out
}

/// Small synthetic corpus with an index, features and a model, built once.
struct Fixture {
    _dir: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn path(&self, name: &str) -> String {
        self.root.join(name).to_string_lossy().into_owned()
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let root = dir.path().to_path_buf();
        let f = Fixture { _dir: dir, root };
        ok(&[
            "synth",
            "--out-dir",
            &f.path(""),
            "--docs",
            "800",
            "--queries",
            "10",
        ]);
        ok(&[
            "index",
            "--docs",
            &f.path("docs.jsonl"),
            "--out",
            &f.path("idx.bin"),
        ]);
        ok(&[
            "features",
            "--index",
            &f.path("idx.bin"),
            "--embeddings",
            &f.path("vectors.txt"),
            "--queries",
            &f.path("queries.tsv"),
            "--qrels",
            &f.path("qrels.txt"),
            "--out",
            &f.path("train.txt"),
        ]);
        ok(&[
            "train",
            "--features",
            &f.path("train.txt"),
            "--model",
            &f.path("model.json"),
            "--trees",
            "30",
        ]);
        f
    })
}

fn scratch() -> TempDir {
    TempDir::new().unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn help_shows_documented_defaults() {
    let search = String::from_utf8(ok(&["search", "--help"]).stdout).unwrap();
    assert!(search.contains("[default: 1.9]"), "{search}");
    assert!(search.contains("[default: 1]"), "{search}");
    let label = String::from_utf8(ok(&["label", "--help"]).stdout).unwrap();
    assert!(label.contains("[default: 0.33]"), "{label}");
    assert!(label.contains("[default: 15]"), "{label}");
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let f = fixture();
    // unknown flag
    assert_eq!(code(&semrank(&["search", "--bogus"])), 1);
    // semantic scorer without embeddings
    let out = semrank(&[
        "search",
        "--index",
        &f.path("idx.bin"),
        "--scorer",
        "sem",
        "--query",
        "c1a",
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    // bad candidate spec
    let out = semrank(&[
        "search",
        "--index",
        &f.path("idx.bin"),
        "--candidates",
        "0",
        "--query",
        "c1a",
    ]);
    assert_eq!(code(&out), 1);
    // unknown metric
    let out = semrank(&["eval", "--run", "x", "--qrels", "y", "--metric", "p@5"]);
    assert_eq!(code(&out), 1);
    // missing file is a data error naming the path
    let missing = f.path("no-such-index.bin");
    let out = semrank(&["search", "--index", &missing, "--query", "c1a"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains(&missing));
    // query that is all stopwords
    let out = semrank(&[
        "search",
        "--index",
        &f.path("idx.bin"),
        "--query",
        "the of and",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_inputs_are_data_errors() {
    let d = scratch();
    fs::write(
        p(d.path(), "docs.jsonl"),
        "{\"id\": \"a\", \"title\": \"x\"\n",
    )
    .unwrap();
    let out = semrank(&[
        "index",
        "--docs",
        &p(d.path(), "docs.jsonl"),
        "--out",
        &p(d.path(), "i.bin"),
    ]);
    assert_eq!(code(&out), 2);
    fs::write(p(d.path(), "run"), "q1 Q0 d1 1 notanumber t\n").unwrap();
    fs::write(p(d.path(), "qrels"), "q1 0 d1 1\n").unwrap();
    let out = semrank(&[
        "eval",
        "--run",
        &p(d.path(), "run"),
        "--qrels",
        &p(d.path(), "qrels"),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn no_lexical_match_yields_empty_run() {
    let f = fixture();
    let d = scratch();
    let run = p(d.path(), "run");
    ok(&[
        "search",
        "--index",
        &f.path("idx.bin"),
        "--query",
        "zzzunseen",
        "--out",
        &run,
    ]);
    assert_eq!(fs::read_to_string(&run).unwrap(), "");
}

#[test]
fn retraining_gives_byte_identical_model() {
    let f = fixture();
    let d = scratch();
    let again = p(d.path(), "model.json");
    ok(&[
        "train",
        "--features",
        &f.path("train.txt"),
        "--model",
        &again,
        "--trees",
        "30",
    ]);
    assert_eq!(
        fs::read(f.path("model.json")).unwrap(),
        fs::read(&again).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let f = fixture();
    let d = scratch();
    for scorer in ["bm25", "sem", "ltr"] {
        let mut runs = Vec::new();
        for threads in ["1", "8"] {
            let out = p(d.path(), &format!("{scorer}-{threads}.run"));
            ok(&[
                "search",
                "--index",
                &f.path("idx.bin"),
                "--embeddings",
                &f.path("vectors.txt"),
                "--model",
                &f.path("model.json"),
                "--scorer",
                scorer,
                "--queries",
                &f.path("queries.tsv"),
                "--threads",
                threads,
                "--out",
                &out,
            ]);
            runs.push(fs::read(&out).unwrap());
        }
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{scorer} differs between 1 and 8 threads");
    }
}

#[test]
fn ltr_search_equals_rerank_of_candidates() {
    let f = fixture();
    let d = scratch();
    let query = "c1a c2a c3a";
    let run = p(d.path(), "ltr.run");
    ok(&[
        "search",
        "--index",
        &f.path("idx.bin"),
        "--embeddings",
        &f.path("vectors.txt"),
        "--model",
        &f.path("model.json"),
        "--scorer",
        "ltr",
        "--query",
        query,
        "--out",
        &run,
    ]);
    let cli: Vec<String> = fs::read_to_string(&run)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().nth(2).unwrap().to_string())
        .collect();

    let open = |name: &str| BufReader::new(fs::File::open(f.path(name)).unwrap());
    let index = CorpusIndex::load(open("idx.bin")).unwrap();
    let table = EmbeddingTable::load(open("vectors.txt"), EmbeddingFormat::Text).unwrap();
    let model = RankingModel::load(open("model.json")).unwrap();
    let config = SearchConfig {
        scorer: ScorerKind::Bm25,
        candidates: CandidateSet::Bm25Top(500),
        ..Default::default()
    };
    let engine = SearchEngine::new(&index, Some(&table), None, config).unwrap();
    let tokens = index.tokenize(query);
    let candidates: Vec<Candidate> = engine.candidate_features(&tokens, &model.schema).unwrap();
    let direct: Vec<String> = rerank(&model, &candidates)
        .unwrap()
        .into_iter()
        .map(|s| s.doc_id)
        .collect();
    assert!(!direct.is_empty());
    assert_eq!(cli, direct);
}

#[test]
fn explain_writes_one_json_object_per_match() {
    let f = fixture();
    let d = scratch();
    let explain = p(d.path(), "explain.jsonl");
    ok(&[
        "search",
        "--index",
        &f.path("idx.bin"),
        "--embeddings",
        &f.path("vectors.txt"),
        "--scorer",
        "sem",
        "--query",
        "c1a c2a",
        "--top-k",
        "5",
        "--out",
        &p(d.path(), "run"),
        "--explain",
        &explain,
    ]);
    let text = fs::read_to_string(&explain).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!lines.is_empty() && lines.len() <= 10);
    for v in &lines {
        assert_eq!(v["qid"], "q1");
        assert!(["c1a", "c2a"].contains(&v["qterm"].as_str().unwrap()));
        assert!(v["cos"].as_f64().unwrap() <= 1.0 + 1e-9);
        assert!(v["doc_id"].is_string() && v["dterm"].is_string());
    }
}

#[test]
fn config_file_fills_unset_flags_and_cli_wins() {
    let f = fixture();
    let d = scratch();
    let cfg = p(d.path(), "c.toml");
    fs::write(&cfg, "[search]\ntop_k = 3\ntag = \"fromconfig\"\n").unwrap();
    let run = p(d.path(), "run");
    let base = [
        "search",
        "--index",
        &f.path("idx.bin"),
        "--query",
        "c1a",
        "--out",
        &run,
    ];

    let mut args = base.to_vec();
    args.extend(["--config", &cfg]);
    ok(&args);
    let text = fs::read_to_string(&run).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.ends_with(" fromconfig")));

    args.extend(["--top-k", "2"]);
    ok(&args);
    assert_eq!(fs::read_to_string(&run).unwrap().lines().count(), 2);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let f = fixture();
    let d = scratch();
    let cfg = p(d.path(), "c.toml");
    let args = [
        "--config",
        &cfg,
        "search",
        "--index",
        &f.path("idx.bin"),
        "--query",
        "c1a",
    ];
    fs::write(&cfg, "[search]\ntopk = 3\n").unwrap();
    let out = semrank(&args);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("topk"));
    fs::write(&cfg, "[serch]\ntop_k = 3\n").unwrap();
    assert_eq!(code(&semrank(&args)), 1);
}

#[test]
fn eval_reports_requested_metrics() {
    let d = scratch();
    fs::write(
        p(d.path(), "run"),
        "q1 Q0 a 1 3 t\nq1 Q0 b 2 2 t\nq1 Q0 c 3 1 t\n",
    )
    .unwrap();
    fs::write(p(d.path(), "qrels"), "q1 0 b 1\nq1 0 c 0\n").unwrap();
    let out = ok(&[
        "eval",
        "--run",
        &p(d.path(), "run"),
        "--qrels",
        &p(d.path(), "qrels"),
        "--metric",
        "map,ndcg@10",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mean = text.lines().find(|l| l.starts_with("mean")).unwrap();
    let cols: Vec<&str> = mean.split('\t').collect();
    assert_eq!(cols[1], "0.5000");
    // relevant doc at rank 2: 1/log2(3)
    assert_eq!(cols[2], format!("{:.4}", 1.0 / 3f64.log2()));
    // condensed list drops the unjudged `a`
    let out = ok(&[
        "eval",
        "--run",
        &p(d.path(), "run"),
        "--qrels",
        &p(d.path(), "qrels"),
        "--judged-only",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "mean\t1.0000"), "{text}");
}

#[test]
fn label_writes_qrels_and_queries() {
    let d = scratch();
    let clicks = p(d.path(), "clicks.tsv");
    fs::write(
        &clicks,
        "neural ranking\tD1\t5\t2\t1\t30\t40\n\
         neural ranking\tD2\t3\t0\t0\t30\t40\n\
         smith j\tD3\t3\t0\t0\t30\t40\n\
         rare query\tD1\t1\t1\t1\t2\t40\n",
    )
    .unwrap();
    let (qrels, queries) = (p(d.path(), "qrels"), p(d.path(), "queries"));
    ok(&[
        "label",
        "--clicks",
        &clicks,
        "--qrels",
        &qrels,
        "--queries",
        &queries,
    ]);
    // 0.33*5 + 0.67*2 = 2.99; 0.33*3 + 0.67*0 + 3/15 = 1.19
    assert_eq!(
        fs::read_to_string(&qrels).unwrap(),
        "q1 0 D1 2.9900\nq1 0 D2 1.1900\n"
    );
    assert_eq!(
        fs::read_to_string(&queries).unwrap(),
        "q1\tneural ranking\n"
    );
}
