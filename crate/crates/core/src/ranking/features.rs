use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, Field, TermId};
use crate::embeddings::EmbeddingTable;
use crate::scoring::lexical_ids;
use crate::scoring::{Bm25Params, SemQuery, SemScorer};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// BM25 over title and abstract together.
    Bm25,
    SemTitle,
    SemAbstract,
    SemBoth,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Bm25 => "bm25",
            FeatureKind::SemTitle => "sem_title",
            FeatureKind::SemAbstract => "sem_abstract",
            FeatureKind::SemBoth => "sem_both",
        }
    }

    fn sem_field(self) -> Option<Field> {
        match self {
            FeatureKind::Bm25 => None,
            FeatureKind::SemTitle => Some(Field::Title),
            FeatureKind::SemAbstract => Some(Field::Abstract),
            FeatureKind::SemBoth => Some(Field::Both),
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(FeatureKind::Bm25),
            "sem_title" => Ok(FeatureKind::SemTitle),
            "sem_abstract" => Ok(FeatureKind::SemAbstract),
            "sem_both" | "sem" => Ok(FeatureKind::SemBoth),
            other => Err(Error::invalid("feature", other.to_string())),
        }
    }
}

/// Ordered feature names. Cheap to clone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureSchema(Arc<Vec<String>>);

impl From<Vec<String>> for FeatureSchema {
    fn from(names: Vec<String>) -> Self {
        FeatureSchema(Arc::new(names))
    }
}

impl From<FeatureSchema> for Vec<String> {
    fn from(s: FeatureSchema) -> Self {
        s.0.as_ref().clone()
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        FeatureSchema::from_kinds(&[FeatureKind::Bm25, FeatureKind::SemTitle])
    }
}

impl FeatureSchema {
    pub fn from_kinds(kinds: &[FeatureKind]) -> Self {
        kinds
            .iter()
            .map(|k| k.name().to_string())
            .collect::<Vec<_>>()
            .into()
    }

    /// Parses a comma- or whitespace-separated list of feature names.
    pub fn parse(spec: &str) -> Result<Self> {
        let names: Vec<String> = spec
            .split([',', ' '])
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if names.is_empty() {
            return Err(Error::invalid("feature schema", "no features"));
        }
        let schema = FeatureSchema::from(names);
        schema.kinds()?;
        Ok(schema)
    }

    /// Placeholder names `f1..fn` for files that carry no schema.
    pub fn anonymous(n: usize) -> Self {
        (1..=n).map(|i| format!("f{i}")).collect::<Vec<_>>().into()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kinds(&self) -> Result<Vec<FeatureKind>> {
        self.0.iter().map(|n| n.parse()).collect()
    }

    pub fn describe(&self) -> String {
        self.0.join(",")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub schema: FeatureSchema,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema: FeatureSchema, values: Vec<f64>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: schema.describe(),
                found: format!("{} values", values.len()),
            });
        }
        Ok(FeatureVector { schema, values })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureConfig {
    pub schema: FeatureSchema,
    pub bm25: Bm25Params,
}

/// Computes feature vectors for many documents against one index and table.
pub struct FeatureExtractor<'a> {
    sem: SemScorer<'a>,
    kinds: Vec<FeatureKind>,
    config: FeatureConfig,
}

/// A query resolved once for repeated feature extraction.
pub struct PreparedQuery {
    term_ids: Vec<TermId>,
    sem: SemQuery,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(
        index: &'a CorpusIndex,
        table: &'a EmbeddingTable,
        config: FeatureConfig,
    ) -> Result<Self> {
        config.bm25.validate()?;
        Ok(FeatureExtractor {
            sem: SemScorer::new(index, table),
            kinds: config.schema.kinds()?,
            config,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.config.schema
    }

    pub fn prepare<S: AsRef<str>>(&self, query_tokens: &[S]) -> Result<PreparedQuery> {
        let term_ids = lexical_ids(query_tokens, self.sem.index())?;
        let sem = self.sem.prepare(query_tokens)?;
        Ok(PreparedQuery { term_ids, sem })
    }

    pub fn extract(&self, query: &PreparedQuery, doc: usize) -> Result<FeatureVector> {
        let index = self.sem.index();
        let values = self
            .kinds
            .iter()
            .map(|kind| match kind.sem_field() {
                None => crate::scoring::bm25_for_ids(
                    &query.term_ids,
                    doc,
                    index,
                    self.config.bm25,
                    Field::Both,
                ),
                Some(field) => Ok(self.sem.score(&query.sem, doc, field).score),
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureVector::new(self.config.schema.clone(), values)
    }
}

/// Feature vector of one (query, document) pair. BM25 reads both fields; SEM
/// features read the field named by the schema. A SEM feature with nothing to
/// match is 0 rather than an error.
pub fn extract_features<S: AsRef<str>>(
    query_tokens: &[S],
    doc: usize,
    index: &CorpusIndex,
    table: &EmbeddingTable,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    let extractor = FeatureExtractor::new(index, table, config.clone())?;
    let query = extractor.prepare(query_tokens)?;
    extractor.extract(&query, doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_index, Document, TokenConfig};
    use crate::scoring::{score_bm25, score_sem};

    fn fixture() -> (CorpusIndex, EmbeddingTable) {
        let ix = build_index(
            vec![
                Document::new("d1", "wound therapy", "negative pressure wound dressing"),
                Document::new("d2", "cancer", "tumor growth"),
                Document::new("d3", "therapies", "npwt devices"),
            ],
            &TokenConfig::without_stopwords(),
        )
        .unwrap();
        let table = EmbeddingTable::from_vectors(
            3,
            [
                ("wound", vec![1.0, 0.1, 0.0]),
                ("therapy", vec![0.0, 1.0, 0.1]),
                ("therapies", vec![0.0, 0.95, 0.2]),
                ("cancer", vec![0.1, 0.0, 1.0]),
                ("tumor", vec![0.2, 0.0, 0.9]),
            ],
        )
        .unwrap();
        (ix, table)
    }

    #[test]
    fn schema_parsing() {
        let s = FeatureSchema::parse("bm25, sem_abstract").unwrap();
        assert_eq!(s.names(), &["bm25", "sem_abstract"]);
        assert!(FeatureSchema::parse("bm25,pagerank").is_err());
        assert_eq!(FeatureSchema::default().describe(), "bm25,sem_title");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"["bm25","sem_abstract"]"#);
        assert_eq!(serde_json::from_str::<FeatureSchema>(&json).unwrap(), s);
    }

    #[test]
    fn unknown_query_gives_zero_features() {
        let (ix, t) = fixture();
        let fv = extract_features(&["zzz"], 0, &ix, &t, &FeatureConfig::default()).unwrap();
        assert_eq!(fv.values, vec![0.0, 0.0]);
    }

    #[test]
    fn verbatim_title_word_gives_idf() {
        let (ix, t) = fixture();
        let fv = extract_features(&["wound"], 0, &ix, &t, &FeatureConfig::default()).unwrap();
        assert_eq!(fv.values[1], ix.idf("wound").unwrap());
    }

    #[test]
    fn matches_direct_scorers() {
        let (ix, t) = fixture();
        let cfg = FeatureConfig {
            schema: FeatureSchema::parse("bm25,sem_title,sem_abstract,sem_both").unwrap(),
            bm25: Bm25Params::default(),
        };
        let q = ["wound", "therapy", "cancer", "unknown"];
        for doc in 0..ix.num_docs() {
            let fv = extract_features(&q, doc, &ix, &t, &cfg).unwrap();
            let bm25 = score_bm25(&q, doc, &ix, cfg.bm25, Field::Both).unwrap();
            assert_eq!(fv.values[0], bm25);
            for (i, field) in [Field::Title, Field::Abstract, Field::Both]
                .into_iter()
                .enumerate()
            {
                assert_eq!(
                    fv.values[i + 1],
                    score_sem(&q, doc, &t, &ix, field).unwrap().score
                );
            }
        }
    }

    #[test]
    fn empty_query_propagates() {
        let (ix, t) = fixture();
        let empty: [&str; 0] = [];
        assert!(extract_features(&empty, 0, &ix, &t, &FeatureConfig::default()).is_err());
    }
}
