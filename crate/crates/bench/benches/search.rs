use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semrank::{CandidateSet, ScorerKind, SearchConfig, SearchEngine};
use semrank_bench::fixture;

fn full_corpus_search(c: &mut Criterion) {
    let f = fixture(5000, 10);
    let q = f.query_tokens(0);
    let table = &f.corpus.embeddings;
    let mut g = c.benchmark_group("search_5000_docs");
    g.sample_size(20);
    let cases = [
        (ScorerKind::Bm25, CandidateSet::Bm25Top(500)),
        (ScorerKind::Tfidf, CandidateSet::Bm25Top(500)),
        (ScorerKind::Centroid, CandidateSet::All),
        (ScorerKind::Sem, CandidateSet::Bm25Top(500)),
        (ScorerKind::Sem, CandidateSet::All),
    ];
    for (scorer, candidates) in cases {
        let config = SearchConfig {
            scorer,
            candidates,
            ..Default::default()
        };
        let engine = SearchEngine::new(&f.index, Some(table), None, config).unwrap();
        let label = match candidates {
            CandidateSet::All => format!("{scorer}/all"),
            CandidateSet::Bm25Top(n) => format!("{scorer}/top{n}"),
        };
        g.bench_function(label, |b| b.iter(|| engine.search_tokens(&q).unwrap()));
    }
    g.finish();
}

fn thread_scaling(c: &mut Criterion) {
    let f = fixture(5000, 10);
    let q = f.query_tokens(0);
    let table = &f.corpus.embeddings;
    let mut g = c.benchmark_group("sem_all_threads");
    g.sample_size(20);
    for threads in [1usize, 2, 4, 8] {
        let config = SearchConfig {
            scorer: ScorerKind::Sem,
            candidates: CandidateSet::All,
            threads,
            ..Default::default()
        };
        let engine = SearchEngine::new(&f.index, Some(table), None, config).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, _| {
            b.iter(|| engine.search_tokens(&q).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, full_corpus_search, thread_scaling);
criterion_main!(benches);
