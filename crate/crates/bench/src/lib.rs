//! Shared fixtures for the benchmarks.

use semrank::synth::{generate, SynthConfig, SynthCorpus};
use semrank::{build_index, CorpusIndex, TokenConfig};

pub struct Fixture {
    pub corpus: SynthCorpus,
    pub index: CorpusIndex,
}

/// Synthetic corpus and its index. Fixed seed, so every run sees the same data.
pub fn fixture(num_docs: usize, num_queries: usize) -> Fixture {
    let cfg = SynthConfig {
        num_docs,
        num_queries,
        ..Default::default()
    };
    let corpus = generate(&cfg).expect("valid synth config");
    let index = build_index(corpus.docs.iter().cloned(), &TokenConfig::default()).expect("index");
    Fixture { corpus, index }
}

impl Fixture {
    pub fn query_tokens(&self, i: usize) -> Vec<String> {
        self.index.tokenize(&self.corpus.queries[i].query)
    }
}
