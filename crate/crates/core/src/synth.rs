//! Seeded synthetic collections with planted synonymy.
//!
//! Every concept has two surface forms, `a` and `b`, whose embeddings are
//! noisy copies of one base vector. Queries are written with `a` forms.
//! Relevant documents are mostly written with `b` forms, so lexical matching
//! misses them while embedding similarity does not. Hard negatives repeat one
//! query word (`decoys`) or mention one concept in a short text (`partials`).

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::embeddings::EmbeddingTable;
use crate::releval::JudgedQuery;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_docs: usize,
    pub num_queries: usize,
    pub concepts_per_query: usize,
    pub dim: usize,
    pub background_vocab: usize,
    pub abstract_len: usize,
    pub title_len: usize,
    /// Relevant documents per query that contain no query word.
    pub zero_literal: usize,
    /// Relevant documents per query with one query word in the abstract.
    pub literal: usize,
    pub decoys: usize,
    pub partials: usize,
    /// Per-coordinate noise scale of a surface form around its concept.
    pub synonym_noise: f64,
    /// Chance that a filler document mentions a random query word once.
    pub filler_mention_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_docs: 5000,
            num_queries: 100,
            concepts_per_query: 3,
            dim: 100,
            background_vocab: 4000,
            abstract_len: 150,
            title_len: 8,
            zero_literal: 8,
            literal: 4,
            decoys: 10,
            partials: 6,
            synonym_noise: 0.3,
            filler_mention_rate: 0.2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub docs: Vec<Document>,
    pub queries: Vec<JudgedQuery>,
    pub embeddings: EmbeddingTable,
}

fn form(concept: usize, variant: char) -> String {
    format!("c{concept}{variant}")
}

fn background(i: usize) -> String {
    format!("w{i}")
}

struct Gen {
    rng: ChaCha8Rng,
    zipf: WeightedIndex<f64>,
}

impl Gen {
    fn filler(&mut self, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| background(self.zipf.sample(&mut self.rng)))
            .collect()
    }

    /// Background text of length `n` with `words` inserted at random positions.
    fn text(&mut self, n: usize, words: Vec<String>) -> String {
        let mut toks = self.filler(n.saturating_sub(words.len()));
        for w in words {
            let at = self.rng.gen_range(0..=toks.len());
            toks.insert(at, w);
        }
        toks.join(" ")
    }

    fn grade(&mut self) -> f64 {
        if self.rng.gen_bool(0.5) {
            1.0
        } else {
            2.0
        }
    }

    fn unit(&mut self, dim: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| self.rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let per_query = self.zero_literal + self.literal + self.decoys + self.partials;
        if self.num_queries == 0 || self.concepts_per_query == 0 || self.dim == 0 {
            return Err(Error::invalid(
                "synth",
                "queries, concepts and dim must be positive",
            ));
        }
        if self.background_vocab == 0 || self.abstract_len < 2 * self.concepts_per_query {
            return Err(Error::invalid(
                "synth",
                "background vocabulary or abstract too small",
            ));
        }
        if per_query * self.num_queries > self.num_docs {
            return Err(Error::invalid(
                "synth",
                format!(
                    "{} planted documents exceed num_docs = {}",
                    per_query * self.num_queries,
                    self.num_docs
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.filler_mention_rate)
            || !self.synonym_noise.is_finite()
            || self.synonym_noise < 0.0
        {
            return Err(Error::invalid(
                "synth",
                "rates must be in [0, 1], noise non-negative",
            ));
        }
        Ok(())
    }
}

/// Generates a collection, its judged queries, and an embedding table covering
/// every word. Output is a pure function of the configuration.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let weights: Vec<f64> = (1..=cfg.background_vocab).map(|r| 1.0 / r as f64).collect();
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        zipf: WeightedIndex::new(weights).expect("positive weights"),
    };
    let num_concepts = cfg.num_queries * cfg.concepts_per_query;

    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    let noise = cfg.synonym_noise / (cfg.dim as f64).sqrt();
    for c in 0..num_concepts {
        let base = g.unit(cfg.dim);
        for variant in ['a', 'b'] {
            let v: Vec<f32> = base
                .iter()
                .map(|&x| (x + noise * g.rng.sample::<f64, _>(StandardNormal)) as f32)
                .collect();
            rows.push((form(c, variant), v));
        }
    }
    for i in 0..cfg.background_vocab {
        let v = g.unit(cfg.dim).into_iter().map(|x| x as f32).collect();
        rows.push((background(i), v));
    }
    let embeddings = EmbeddingTable::from_vectors(cfg.dim, rows)?;

    let mut docs = Vec::with_capacity(cfg.num_docs);
    let mut queries = Vec::with_capacity(cfg.num_queries);
    let k = cfg.concepts_per_query;
    for q in 0..cfg.num_queries {
        let concepts: Vec<usize> = (q * k..(q + 1) * k).collect();
        let text = concepts
            .iter()
            .map(|&c| form(c, 'a'))
            .collect::<Vec<_>>()
            .join(" ");
        let mut grades = Vec::new();
        let mut push = |title: String, abs: String, grade: f64| {
            let id = format!("D{:06}", docs.len());
            grades.push((id.clone(), grade));
            docs.push(Document::new(id, title, abs));
        };

        for _ in 0..cfg.zero_literal {
            let n_title = g.rng.gen_range(1..=k.min(2));
            let title_words: Vec<String> = concepts
                .choose_multiple(&mut g.rng, n_title)
                .map(|&c| form(c, 'b'))
                .collect();
            let mut abs_words = Vec::new();
            for &c in &concepts {
                for _ in 0..g.rng.gen_range(1..=2) {
                    abs_words.push(form(c, 'b'));
                }
            }
            let title = g.text(cfg.title_len, title_words);
            let abs = g.text(cfg.abstract_len, abs_words);
            let grade = g.grade();
            push(title, abs, grade);
        }
        for _ in 0..cfg.literal {
            let literal = *concepts.choose(&mut g.rng).expect("non-empty");
            let others: Vec<usize> = concepts.iter().copied().filter(|&c| c != literal).collect();
            let title_words: Vec<String> = others.iter().map(|&c| form(c, 'b')).take(2).collect();
            let mut abs_words = vec![form(literal, 'a')];
            abs_words.extend(others.iter().map(|&c| form(c, 'b')));
            let title = g.text(cfg.title_len, title_words);
            let abs = g.text(cfg.abstract_len, abs_words);
            let grade = g.grade();
            push(title, abs, grade);
        }
        for _ in 0..cfg.decoys {
            let c = *concepts.choose(&mut g.rng).expect("non-empty");
            let reps = g.rng.gen_range(3..=5);
            let title = g.text(cfg.title_len, Vec::new());
            let abs = g.text(cfg.abstract_len, vec![form(c, 'a'); reps]);
            push(title, abs, 0.0);
        }
        for _ in 0..cfg.partials {
            let c = *concepts.choose(&mut g.rng).expect("non-empty");
            let title = g.text(cfg.title_len, vec![form(c, 'b')]);
            let abs = g.text(cfg.abstract_len / 5, vec![form(c, 'b')]);
            push(title, abs, 0.0);
        }
        queries.push(JudgedQuery::new(format!("q{}", q + 1), text, grades));
    }

    while docs.len() < cfg.num_docs {
        let mut words = Vec::new();
        if g.rng.gen_bool(cfg.filler_mention_rate) {
            words.push(form(g.rng.gen_range(0..num_concepts), 'a'));
        }
        let title = g.text(cfg.title_len, Vec::new());
        let abs = g.text(cfg.abstract_len, words);
        docs.push(Document::new(format!("D{:06}", docs.len()), title, abs));
    }

    Ok(SynthCorpus {
        docs,
        queries,
        embeddings,
    })
}
