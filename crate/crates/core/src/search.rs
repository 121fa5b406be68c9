//! Query-time pipeline: candidate generation, scoring on a worker pool, and a
//! deterministic merge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, Field, TermId};
use crate::embeddings::{centroid, EmbeddingTable};
use crate::ranking::{
    rerank, Candidate, FeatureConfig, FeatureExtractor, FeatureSchema, RankingModel,
};
use crate::scoring::ScoredDoc;
use crate::scoring::{bm25_for_ids, lexical_ids, score_tfidf, sort_scored, Bm25Params, SemScorer};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Tfidf,
    Bm25,
    Centroid,
    Sem,
    Ltr,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Tfidf => "tfidf",
            ScorerKind::Bm25 => "bm25",
            ScorerKind::Centroid => "centroid",
            ScorerKind::Sem => "sem",
            ScorerKind::Ltr => "ltr",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(
            self,
            ScorerKind::Centroid | ScorerKind::Sem | ScorerKind::Ltr
        )
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(ScorerKind::Tfidf),
            "bm25" => Ok(ScorerKind::Bm25),
            "centroid" => Ok(ScorerKind::Centroid),
            "sem" => Ok(ScorerKind::Sem),
            "ltr" => Ok(ScorerKind::Ltr),
            _ => Err(Error::invalid(
                "scorer",
                format!("`{s}` (expected tfidf, bm25, centroid, sem or ltr)"),
            )),
        }
    }
}

impl std::fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Documents handed to the embedding-based scorers. Lexical scorers always
/// score exactly the documents sharing a term with the query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSet {
    All,
    Bm25Top(usize),
}

impl Default for CandidateSet {
    fn default() -> Self {
        CandidateSet::Bm25Top(500)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub scorer: ScorerKind,
    pub field: Field,
    pub top_k: usize,
    pub candidates: CandidateSet,
    pub bm25: Bm25Params,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            scorer: ScorerKind::Bm25,
            field: Field::Both,
            top_k: 1000,
            candidates: CandidateSet::default(),
            bm25: Bm25Params::default(),
            threads: 0,
        }
    }
}

pub struct SearchEngine<'a> {
    index: &'a CorpusIndex,
    table: Option<&'a EmbeddingTable>,
    model: Option<&'a RankingModel>,
    config: SearchConfig,
    pool: rayon::ThreadPool,
}

impl<'a> SearchEngine<'a> {
    pub fn new(
        index: &'a CorpusIndex,
        table: Option<&'a EmbeddingTable>,
        model: Option<&'a RankingModel>,
        config: SearchConfig,
    ) -> Result<Self> {
        config.bm25.validate()?;
        if config.top_k == 0 {
            return Err(Error::invalid("top_k", "must be at least 1"));
        }
        if config.scorer.needs_embeddings() && table.is_none() {
            return Err(Error::invalid(
                "embeddings",
                format!("scorer `{}` needs an embedding table", config.scorer),
            ));
        }
        if config.scorer == ScorerKind::Ltr {
            match model {
                None => return Err(Error::invalid("model", "scorer `ltr` needs a model")),
                Some(m) => m.validate()?,
            }
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
        Ok(SearchEngine {
            index,
            table,
            model,
            config,
            pool,
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn index(&self) -> &'a CorpusIndex {
        self.index
    }

    /// Tokenizes `query` with the index configuration and searches.
    pub fn search(&self, query: &str) -> Result<Vec<ScoredDoc>> {
        self.search_tokens(&self.index.tokenize(query))
    }

    /// Top `top_k` documents, descending score, ties by doc id. SEM results
    /// carry their term matches.
    pub fn search_tokens<S: AsRef<str> + Sync>(&self, tokens: &[S]) -> Result<Vec<ScoredDoc>> {
        let ids = lexical_ids(tokens, self.index)?;
        let mut scored = match self.config.scorer {
            ScorerKind::Tfidf => {
                let docs = self.matching_docs(&ids, Field::Both);
                self.par_map(&docs, |d| {
                    Ok(Some(ScoredDoc::new(
                        self.index.doc_id(d),
                        score_tfidf(tokens, d, self.index)?,
                    )))
                })?
            }
            ScorerKind::Bm25 => self.bm25_scored(&ids, self.config.field)?,
            ScorerKind::Sem => {
                let docs = self.candidates(&ids)?;
                self.score_sem(tokens, &docs)?
            }
            ScorerKind::Centroid => {
                let docs = self.candidates(&ids)?;
                let table = self.table.expect("checked at construction");
                let sem = SemScorer::new(self.index, table);
                let q = centroid(table, tokens)?;
                // documents with no embeddable term in the field have no centroid
                self.par_map(&docs, |d| {
                    Ok(sem
                        .score_centroid(&q, d, self.config.field)
                        .ok()
                        .map(|s| ScoredDoc::new(self.index.doc_id(d), s)))
                })?
            }
            ScorerKind::Ltr => {
                let model = self.model.expect("checked at construction");
                let candidates = self.candidate_features(tokens, &model.schema)?;
                rerank(model, &candidates)?
            }
        };
        sort_scored(&mut scored);
        scored.truncate(self.config.top_k);
        Ok(scored)
    }

    /// Feature vectors of the candidate documents, in candidate order.
    pub fn candidate_features<S: AsRef<str>>(
        &self,
        tokens: &[S],
        schema: &FeatureSchema,
    ) -> Result<Vec<Candidate>> {
        let table = self
            .table
            .ok_or_else(|| Error::invalid("embeddings", "features need an embedding table"))?;
        let extractor = FeatureExtractor::new(
            self.index,
            table,
            FeatureConfig {
                schema: schema.clone(),
                bm25: self.config.bm25,
            },
        )?;
        let query = extractor.prepare(tokens)?;
        let docs = self.candidates(&lexical_ids(tokens, self.index)?)?;
        self.pool.install(|| {
            docs.par_iter()
                .map(|&d| {
                    Ok(Candidate {
                        doc_id: self.index.doc_id(d).to_string(),
                        features: extractor.extract(&query, d)?,
                    })
                })
                .collect()
        })
    }

    /// SEM scores of the given documents, in input order.
    pub fn score_sem<S: AsRef<str>>(&self, tokens: &[S], docs: &[usize]) -> Result<Vec<ScoredDoc>> {
        let table = self
            .table
            .ok_or_else(|| Error::invalid("embeddings", "scorer `sem` needs an embedding table"))?;
        let sem = SemScorer::new(self.index, table);
        let query = sem.prepare(tokens)?;
        self.par_map(docs, |d| Ok(Some(sem.score(&query, d, self.config.field))))
    }

    /// Document positions handed to the embedding scorers.
    pub fn candidates(&self, ids: &[TermId]) -> Result<Vec<usize>> {
        match self.config.candidates {
            CandidateSet::All => Ok((0..self.index.num_docs()).collect()),
            CandidateSet::Bm25Top(n) => {
                let mut scored = self.bm25_scored(ids, Field::Both)?;
                sort_scored(&mut scored);
                scored.truncate(n);
                Ok(scored
                    .iter()
                    .map(|s| self.index.doc_index(&s.doc_id).expect("scored from index"))
                    .collect())
            }
        }
    }

    fn bm25_scored(&self, ids: &[TermId], field: Field) -> Result<Vec<ScoredDoc>> {
        let docs = self.matching_docs(ids, field);
        self.par_map(&docs, |d| {
            let s = bm25_for_ids(ids, d, self.index, self.config.bm25, field)?;
            Ok(Some(ScoredDoc::new(self.index.doc_id(d), s)))
        })
    }

    /// Documents containing at least one of `ids` in `field`, ascending.
    fn matching_docs(&self, ids: &[TermId], field: Field) -> Vec<usize> {
        let mut docs: Vec<usize> = ids
            .iter()
            .flat_map(|&id| self.index.postings(id))
            .filter(|p| match field {
                Field::Title => p.title_tf > 0,
                Field::Abstract => p.abstract_tf > 0,
                Field::Both => true,
            })
            .map(|p| p.doc as usize)
            .collect();
        docs.sort_unstable();
        docs.dedup();
        docs
    }

    /// Maps documents on the worker pool; the result keeps input order, so
    /// output never depends on the thread count.
    fn par_map<F>(&self, docs: &[usize], f: F) -> Result<Vec<ScoredDoc>>
    where
        F: Fn(usize) -> Result<Option<ScoredDoc>> + Sync,
    {
        let out: Vec<Option<ScoredDoc>> = self
            .pool
            .install(|| docs.par_iter().map(|&d| f(d)).collect::<Result<Vec<_>>>())?;
        Ok(out.into_iter().flatten().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_index, Document, TokenConfig};
    use crate::scoring::score_bm25;

    fn fixture() -> (CorpusIndex, EmbeddingTable) {
        let ix = build_index(
            vec![
                Document::new("d1", "wound therapy", "negative pressure wound dressing"),
                Document::new("d2", "cancer", "tumor growth"),
                Document::new("d3", "npwt", "vacuum devices"),
                Document::new("d4", "growth", "cancer cells"),
            ],
            &TokenConfig::default(),
        )
        .unwrap();
        let words = [
            ("wound", [1.0, 0.0, 0.0]),
            ("npwt", [0.9, 0.1, 0.0]),
            ("vacuum", [0.8, 0.2, 0.0]),
            ("cancer", [0.0, 1.0, 0.0]),
            ("tumor", [0.0, 0.9, 0.1]),
        ];
        let table =
            EmbeddingTable::from_vectors(3, words.iter().map(|(w, v)| (*w, v.to_vec()))).unwrap();
        (ix, table)
    }

    fn engine<'a>(
        ix: &'a CorpusIndex,
        t: &'a EmbeddingTable,
        scorer: ScorerKind,
    ) -> SearchEngine<'a> {
        let cfg = SearchConfig {
            scorer,
            candidates: CandidateSet::All,
            threads: 2,
            ..Default::default()
        };
        SearchEngine::new(ix, Some(t), None, cfg).unwrap()
    }

    #[test]
    fn bm25_matches_direct_scores() {
        let (ix, t) = fixture();
        let hits = engine(&ix, &t, ScorerKind::Bm25)
            .search("cancer growth")
            .unwrap();
        let ids: Vec<_> = hits.iter().map(|h| h.doc_id.as_str()).collect();
        assert_eq!(ids.len(), 2);
        for h in &hits {
            let d = ix.doc_index(&h.doc_id).unwrap();
            let direct = score_bm25(
                &["cancer", "growth"],
                d,
                &ix,
                Bm25Params::default(),
                Field::Both,
            )
            .unwrap();
            assert_eq!(h.score, direct);
        }
    }

    #[test]
    fn lexical_query_without_corpus_terms_is_empty() {
        let (ix, t) = fixture();
        assert!(engine(&ix, &t, ScorerKind::Bm25)
            .search("zebra")
            .unwrap()
            .is_empty());
        assert!(engine(&ix, &t, ScorerKind::Tfidf)
            .search("zebra")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sem_finds_synonym_without_overlap() {
        let (ix, t) = fixture();
        let hits = engine(&ix, &t, ScorerKind::Sem).search("wound").unwrap();
        assert_eq!(hits[0].doc_id, "d1");
        assert_eq!(hits[1].doc_id, "d3");
        assert!(hits[1].matches.as_ref().unwrap()[0].dterm == "npwt");
    }

    #[test]
    fn output_independent_of_threads() {
        let (ix, t) = fixture();
        let run = |threads| {
            let cfg = SearchConfig {
                scorer: ScorerKind::Sem,
                candidates: CandidateSet::All,
                threads,
                ..Default::default()
            };
            SearchEngine::new(&ix, Some(&t), None, cfg)
                .unwrap()
                .search("wound cancer")
                .unwrap()
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn missing_artifacts_rejected() {
        let (ix, _) = fixture();
        let cfg = SearchConfig {
            scorer: ScorerKind::Sem,
            ..Default::default()
        };
        assert!(SearchEngine::new(&ix, None, None, cfg).is_err());
    }

    #[test]
    fn scorer_names_round_trip() {
        for k in [
            ScorerKind::Tfidf,
            ScorerKind::Bm25,
            ScorerKind::Centroid,
            ScorerKind::Sem,
            ScorerKind::Ltr,
        ] {
            assert_eq!(k.name().parse::<ScorerKind>().unwrap(), k);
        }
        assert!("wmd".parse::<ScorerKind>().is_err());
    }
}
