use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use semrank::corpus::{read_documents, read_stopwords, IndexBuilder};
use semrank::ranking::{read_letor, split_queries, write_letor, TrainingInstance};
use semrank::releval::{
    aggregate_and_filter, label_queries, ndcg_of_grades, read_click_log, read_qrels, read_queries,
    read_run, write_qrels, write_queries, write_run, AggregateParams, Judgments,
    NonInformationalFilter,
};
use semrank::synth::{generate, SynthConfig};
use semrank::{
    train_lambdamart, Bm25Params, CandidateSet, CorpusIndex, DfSource, EmbeddingFormat,
    EmbeddingTable, FeatureSchema, Field, IdfOptions, LabelParams, LtrHyperparams, Metric,
    RankingModel, ScorerKind, SearchConfig, SearchEngine, TokenConfig,
};

use crate::cli::*;
use crate::UsageError;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Index(a) => index(a),
        Command::EmbedCheck(a) => embed_check(a),
        Command::Search(a) => search(a),
        Command::Features(a) => features(a),
        Command::Label(a) => label(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn field(f: FieldArg) -> Field {
    match f {
        FieldArg::Title => Field::Title,
        FieldArg::Abstract => Field::Abstract,
        FieldArg::Both => Field::Both,
    }
}

fn format(f: FormatArg) -> EmbeddingFormat {
    match f {
        FormatArg::Text => EmbeddingFormat::Text,
        FormatArg::Binary => EmbeddingFormat::Binary,
    }
}

fn scorer(s: ScorerArg) -> ScorerKind {
    match s {
        ScorerArg::Tfidf => ScorerKind::Tfidf,
        ScorerArg::Bm25 => ScorerKind::Bm25,
        ScorerArg::Centroid => ScorerKind::Centroid,
        ScorerArg::Sem => ScorerKind::Sem,
        ScorerArg::Ltr => ScorerKind::Ltr,
    }
}

fn candidates(spec: &str) -> Result<CandidateSet> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(CandidateSet::All);
    }
    match spec.parse::<usize>() {
        Ok(n) if n > 0 => Ok(CandidateSet::Bm25Top(n)),
        _ => Err(usage(format!(
            "--candidates must be a positive count or `all`, got `{spec}`"
        ))),
    }
}

fn bm25(a: &Bm25Args) -> Result<Bm25Params> {
    let p = Bm25Params {
        k: a.bm25_k,
        b: a.bm25_b,
    };
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn load_index(path: &Path) -> Result<CorpusIndex> {
    CorpusIndex::load(open(path)?).with_context(|| format!("cannot load index {}", path.display()))
}

fn load_embeddings(a: &EmbeddingArgs) -> Result<Option<EmbeddingTable>> {
    let Some(path) = &a.embeddings else {
        return Ok(None);
    };
    let table = EmbeddingTable::load(open(path)?, format(a.embeddings_format))
        .with_context(|| format!("cannot load embeddings {}", path.display()))?;
    log::info!(
        "loaded {} vectors of dimension {} from {}",
        table.len(),
        table.dim(),
        path.display()
    );
    Ok(Some(table))
}

fn require_embeddings(a: &EmbeddingArgs, why: &str) -> Result<EmbeddingTable> {
    if a.embeddings.is_none() {
        return Err(usage(format!("--embeddings is required {why}")));
    }
    Ok(load_embeddings(a)?.expect("path present"))
}

fn index(a: IndexArgs) -> Result<()> {
    if a.min_token_length == 0 {
        return Err(usage("--min-token-length must be at least 1"));
    }
    let mut cfg = if a.no_stopwords {
        TokenConfig::without_stopwords()
    } else if let Some(path) = &a.stopwords {
        let words = read_stopwords(open(path)?)
            .with_context(|| format!("cannot read stopwords {}", path.display()))?;
        TokenConfig::without_stopwords().with_stopwords(words)
    } else {
        TokenConfig::default()
    };
    cfg.lowercase = !a.no_lowercase;
    cfg.min_token_length = a.min_token_length;

    let mut builder = IndexBuilder::new(cfg);
    for doc in read_documents(open(&a.docs)?) {
        let doc = doc.with_context(|| format!("in {}", a.docs.display()))?;
        builder
            .add(doc)
            .with_context(|| format!("in {}", a.docs.display()))?;
    }
    let source = match a.idf_source {
        DfSourceArg::Combined => DfSource::Combined,
        DfSourceArg::Title => DfSource::Title,
        DfSourceArg::Abstract => DfSource::Abstract,
    };
    let index = builder.finish().with_idf_options(IdfOptions {
        source,
        clamp_negative: a.clamp_idf,
    });
    let mut w = create(&a.out)?;
    index.save(&mut w)?;
    w.flush()?;
    eprintln!(
        "indexed {} documents, {} terms -> {}",
        index.num_docs(),
        index.num_terms(),
        a.out.display()
    );
    Ok(())
}

fn embed_check(a: EmbedCheckArgs) -> Result<()> {
    let table = require_embeddings(&a.emb, "for embed-check")?;
    let mut out = io::stdout().lock();
    writeln!(out, "words\t{}", table.len())?;
    writeln!(out, "dim\t{}", table.dim())?;
    writeln!(out, "dropped_zero_norm\t{}", table.dropped_zero_norm())?;
    writeln!(out, "duplicates\t{}", table.duplicates())?;
    if let Some(path) = &a.index {
        let index = load_index(path)?;
        let covered = index.terms().iter().filter(|t| table.contains(t)).count();
        let share = if index.num_terms() == 0 {
            0.0
        } else {
            covered as f64 / index.num_terms() as f64
        };
        writeln!(out, "index_terms\t{}", index.num_terms())?;
        writeln!(out, "index_terms_with_vectors\t{covered}\t{share:.4}")?;
    }
    for pair in &a.pair {
        let Some((x, y)) = pair.split_once(',') else {
            return Err(usage(format!("--pair expects `a,b`, got `{pair}`")));
        };
        match table.cosine(x, y) {
            Ok(c) => writeln!(out, "cosine\t{x}\t{y}\t{c:.6}")?,
            Err(_) => writeln!(out, "cosine\t{x}\t{y}\toov")?,
        }
    }
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    let kind = scorer(a.scorer);
    let config = SearchConfig {
        scorer: kind,
        field: field(a.field),
        top_k: a.top_k,
        candidates: candidates(&a.candidates)?,
        bm25: bm25(&a.bm25)?,
        threads: a.threads,
    };
    if a.top_k == 0 {
        return Err(usage("--top-k must be at least 1"));
    }
    if kind == ScorerKind::Ltr && a.model.is_none() {
        return Err(usage("--model is required for scorer ltr"));
    }
    if kind.needs_embeddings() && a.emb.embeddings.is_none() {
        return Err(usage(format!("--embeddings is required for scorer {kind}")));
    }
    let index = load_index(&a.index)?;
    let table = if kind.needs_embeddings() {
        Some(require_embeddings(&a.emb, &format!("for scorer {kind}"))?)
    } else {
        load_embeddings(&a.emb)?
    };
    let model = match &a.model {
        Some(p) if kind == ScorerKind::Ltr => Some(
            RankingModel::load(open(p)?)
                .with_context(|| format!("cannot load model {}", p.display()))?,
        ),
        _ => None,
    };
    let engine = SearchEngine::new(&index, table.as_ref(), model.as_ref(), config)?;

    let queries = match (&a.query, &a.queries) {
        (Some(q), _) => vec![(a.qid.clone(), q.clone())],
        (None, Some(path)) => {
            read_queries(open(path)?).with_context(|| format!("in {}", path.display()))?
        }
        (None, None) => unreachable!("clap requires one of --query/--queries"),
    };
    let single = a.query.is_some();
    let tag = a.tag.clone().unwrap_or_else(|| kind.name().to_string());
    let mut out = output(a.out.as_ref())?;
    let mut explain: Option<Box<dyn Write>> = match &a.explain {
        Some(p) if p.as_os_str() == "-" => Some(Box::new(io::stderr().lock())),
        Some(p) => Some(Box::new(create(p)?)),
        None => None,
    };
    for (qid, text) in &queries {
        let tokens = index.tokenize(text);
        if tokens.is_empty() {
            if single {
                bail!("query `{text}` is empty after preprocessing");
            }
            log::warn!("query `{qid}` is empty after preprocessing; skipped");
            continue;
        }
        let results = engine
            .search_tokens(&tokens)
            .with_context(|| format!("query `{qid}`"))?;
        write_run(&mut out, qid, &results, &tag)?;
        if let Some(w) = explain.as_mut() {
            for r in &results {
                for m in r.matches.iter().flatten() {
                    let line = json!({
                        "qid": qid,
                        "doc_id": r.doc_id,
                        "qterm": m.qterm,
                        "dterm": m.dterm,
                        "cos": m.cos,
                    });
                    writeln!(w, "{line}")?;
                }
            }
        }
    }
    out.flush()?;
    if let Some(w) = explain.as_mut() {
        w.flush()?;
    }
    Ok(())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let schema = FeatureSchema::parse(&a.schema).map_err(|e| usage(e.to_string()))?;
    if !(0.0..=1.0).contains(&a.train_fraction) {
        return Err(usage("--train-fraction must be in [0, 1]"));
    }
    let config = SearchConfig {
        scorer: ScorerKind::Bm25,
        candidates: candidates(&a.candidates)?,
        bm25: bm25(&a.bm25)?,
        threads: a.threads,
        ..Default::default()
    };
    if a.emb.embeddings.is_none() {
        return Err(usage("--embeddings is required for feature extraction"));
    }
    let index = load_index(&a.index)?;
    let table = require_embeddings(&a.emb, "for feature extraction")?;
    let judgments =
        read_qrels(open(&a.qrels)?).with_context(|| format!("in {}", a.qrels.display()))?;
    let queries =
        read_queries(open(&a.queries)?).with_context(|| format!("in {}", a.queries.display()))?;
    let engine = SearchEngine::new(&index, Some(&table), None, config)?;

    let ids: Vec<&str> = queries.iter().map(|(q, _)| q.as_str()).collect();
    let (train_ids, test_ids) = match a.test_out {
        Some(_) => split_queries(&ids, a.train_fraction, a.seed),
        None => (ids.iter().map(|s| s.to_string()).collect(), Vec::new()),
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (qid, text) in &queries {
        let Some(judged) = judgments.get(qid) else {
            log::warn!("query `{qid}` has no judgments; skipped");
            continue;
        };
        let tokens = index.tokenize(text);
        if tokens.is_empty() {
            log::warn!("query `{qid}` is empty after preprocessing; skipped");
            continue;
        }
        let rows: Vec<TrainingInstance> = engine
            .candidate_features(&tokens, &schema)
            .with_context(|| format!("query `{qid}`"))?
            .into_iter()
            .map(|c| TrainingInstance {
                query_id: qid.clone(),
                label: judged.grade(&c.doc_id).unwrap_or(0.0),
                doc_id: c.doc_id,
                features: c.features.values,
            })
            .collect();
        if test_ids.binary_search(qid).is_ok() {
            test.extend(rows);
        } else if train_ids.binary_search(qid).is_ok() {
            train.extend(rows);
        }
    }
    let split_note = |part: &str| match a.test_out {
        Some(_) => format!(
            "# split: {part} train_fraction={} seed={}",
            a.train_fraction, a.seed
        ),
        None => "# split: none".to_string(),
    };
    let mut w = create(&a.out)?;
    writeln!(w, "{}", split_note("train"))?;
    write_letor(&mut w, &schema, &train)?;
    w.flush()?;
    eprintln!("{} training rows -> {}", train.len(), a.out.display());
    if let Some(path) = &a.test_out {
        let mut w = create(path)?;
        writeln!(w, "{}", split_note("test"))?;
        write_letor(&mut w, &schema, &test)?;
        w.flush()?;
        eprintln!("{} held-out rows -> {}", test.len(), path.display());
    }
    Ok(())
}

fn label(a: LabelArgs) -> Result<()> {
    let params = LabelParams {
        mu: a.mu,
        lambda_boost: a.lambda,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let mut filter = if a.keep_noninformational {
        NonInformationalFilter::none()
    } else {
        NonInformationalFilter::default()
    };
    if let Some(path) = &a.noninformational {
        let names: Vec<String> = open(path)?
            .lines()
            .collect::<io::Result<Vec<_>>>()
            .with_context(|| format!("cannot read {}", path.display()))?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect();
        filter = filter.with_names(names);
    }
    let records =
        read_click_log(open(&a.clicks)?).with_context(|| format!("in {}", a.clicks.display()))?;
    let n_in = records.len();
    let kept = aggregate_and_filter(
        records,
        AggregateParams {
            min_occurrences: a.min_occurrences,
            min_results: a.min_results,
        },
        |q| filter.is_noninformational(q),
    );
    let judged = label_queries(&kept, params)?;
    let mut w = create(&a.qrels)?;
    write_qrels(&mut w, &judged)?;
    w.flush()?;
    let mut w = create(&a.queries)?;
    write_queries(
        &mut w,
        judged
            .iter()
            .map(|j| (j.query_id.as_str(), j.query.as_str())),
    )?;
    w.flush()?;
    eprintln!(
        "{n_in} click records -> {} merged pairs, {} queries",
        kept.len(),
        judged.len()
    );
    Ok(())
}

fn mean_ndcg(model: &RankingModel, data: &[TrainingInstance], k: usize) -> f64 {
    let mut groups: std::collections::BTreeMap<&str, Vec<&TrainingInstance>> = Default::default();
    for d in data {
        groups.entry(d.query_id.as_str()).or_default().push(d);
    }
    if groups.is_empty() {
        return 0.0;
    }
    let total: f64 = groups
        .values_mut()
        .map(|g| {
            g.sort_by(|a, b| {
                model
                    .score(&b.features)
                    .total_cmp(&model.score(&a.features))
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            let grades: Vec<f64> = g.iter().map(|d| d.label).collect();
            ndcg_of_grades(&grades, k)
        })
        .sum();
    total / groups.len() as f64
}

fn train(a: TrainArgs) -> Result<()> {
    let hp = LtrHyperparams {
        num_trees: a.trees,
        num_leaves: a.leaves,
        learning_rate: a.learning_rate,
        min_instances_per_leaf: a.min_leaf,
        ndcg_k: a.ndcg_k,
        max_thresholds: a.max_thresholds,
        rng_seed: a.seed,
    };
    hp.validate().map_err(|e| usage(e.to_string()))?;
    let (schema, data) =
        read_letor(open(&a.features)?).with_context(|| format!("in {}", a.features.display()))?;
    let model = train_lambdamart(&schema, &data, &hp)?;
    let mut w = create(&a.model)?;
    model.save(&mut w)?;
    w.flush()?;
    eprintln!(
        "{} trees on {} rows; training NDCG@{} {:.4} -> {}",
        model.trees.len(),
        data.len(),
        hp.ndcg_k,
        mean_ndcg(&model, &data, hp.ndcg_k),
        a.model.display()
    );
    if let Some(path) = &a.validate {
        let (vschema, vdata) =
            read_letor(open(path)?).with_context(|| format!("in {}", path.display()))?;
        if vschema.names() != schema.names() {
            bail!(
                "validation schema [{}] differs from training schema [{}]",
                vschema.describe(),
                schema.describe()
            );
        }
        println!(
            "validation NDCG@{}\t{:.4}",
            hp.ndcg_k,
            mean_ndcg(&model, &vdata, hp.ndcg_k)
        );
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let metrics = a
        .metric
        .iter()
        .map(|m| m.parse::<Metric>().map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let run = read_run(open(&a.run)?).with_context(|| format!("in {}", a.run.display()))?;
    let judgments: Judgments =
        read_qrels(open(&a.qrels)?).with_context(|| format!("in {}", a.qrels.display()))?;
    let report = semrank::evaluate_run(&run, &judgments, &metrics, a.judged_only);
    let mut out = output(a.out.as_ref())?;
    out.write_all(report.to_tsv().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        num_docs: a.docs,
        num_queries: a.queries,
        dim: a.dim,
        seed: a.seed,
        ..Default::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let corpus = generate(&cfg)?;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let dir = &a.out_dir;

    let mut w = create(&dir.join("docs.jsonl"))?;
    for d in &corpus.docs {
        writeln!(w, "{}", serde_json::to_string(d)?)?;
    }
    w.flush()?;
    let mut w = create(&dir.join("queries.tsv"))?;
    write_queries(
        &mut w,
        corpus
            .queries
            .iter()
            .map(|q| (q.query_id.as_str(), q.query.as_str())),
    )?;
    w.flush()?;
    let mut w = create(&dir.join("qrels.txt"))?;
    write_qrels(&mut w, &corpus.queries)?;
    w.flush()?;
    let (name, fmt) = match a.embeddings_format {
        FormatArg::Text => ("vectors.txt", EmbeddingFormat::Text),
        FormatArg::Binary => ("vectors.bin", EmbeddingFormat::Binary),
    };
    let mut w = create(&dir.join(name))?;
    match fmt {
        EmbeddingFormat::Text => corpus.embeddings.write_text(&mut w)?,
        EmbeddingFormat::Binary => corpus.embeddings.write_binary(&mut w)?,
    }
    w.flush()?;
    let mut w = create(&dir.join("synth.json"))?;
    writeln!(w, "{}", serde_json::to_string_pretty(&cfg)?)?;
    w.flush()?;
    eprintln!(
        "{} documents, {} queries, {} vectors -> {}",
        corpus.docs.len(),
        corpus.queries.len(),
        corpus.embeddings.len(),
        dir.display()
    );
    Ok(())
}
