use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, TokenConfig};
use crate::{Error, Result};

pub type TermId = u32;

/// A document restricted to the two fields every scorer works with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
    ) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
        }
    }
}

/// Which part of a document a scorer reads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Abstract,
    #[default]
    Both,
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "title" => Ok(Field::Title),
            "abstract" => Ok(Field::Abstract),
            "both" => Ok(Field::Both),
            other => Err(Error::invalid(
                "field",
                format!("`{other}` (expected title, abstract or both)"),
            )),
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Field::Title => "title",
            Field::Abstract => "abstract",
            Field::Both => "both",
        })
    }
}

/// Which document frequencies feed idf.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DfSource {
    #[default]
    Combined,
    Title,
    Abstract,
}

impl std::str::FromStr for DfSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" | "both" => Ok(DfSource::Combined),
            "title" => Ok(DfSource::Title),
            "abstract" => Ok(DfSource::Abstract),
            other => Err(Error::invalid("idf source", other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdfOptions {
    pub source: DfSource,
    /// Floor negative idf values at zero. Off by default.
    pub clamp_negative: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCounts {
    pub title: u32,
    pub abstract_: u32,
    pub combined: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub title_tf: u32,
    pub abstract_tf: u32,
}

/// Per-document term frequencies, each list sorted by term id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct DocEntry {
    title: Vec<(TermId, u32)>,
    abstract_: Vec<(TermId, u32)>,
    both: Vec<(TermId, u32)>,
    title_len: u32,
    abstract_len: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
struct AvgLengths {
    title: f64,
    abstract_: f64,
    combined: f64,
}

/// Immutable collection statistics shared by every scorer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusIndex {
    token_config: TokenConfig,
    idf_options: IdfOptions,
    terms: Vec<String>,
    doc_ids: Vec<String>,
    docs: Vec<DocEntry>,
    df: Vec<FieldCounts>,
    postings: Vec<Vec<Posting>>,
    avg_len: AvgLengths,
    #[serde(skip)]
    term_lookup: HashMap<String, TermId>,
    #[serde(skip)]
    doc_lookup: HashMap<String, u32>,
}

impl PartialEq for CorpusIndex {
    fn eq(&self, other: &Self) -> bool {
        self.token_config == other.token_config
            && self.idf_options == other.idf_options
            && self.terms == other.terms
            && self.doc_ids == other.doc_ids
            && self.docs == other.docs
            && self.df == other.df
            && self.postings == other.postings
            && self.avg_len == other.avg_len
    }
}

/// Builds an index in a single pass over `docs`.
pub fn build_index<I>(docs: I, cfg: &TokenConfig) -> Result<CorpusIndex>
where
    I: IntoIterator<Item = Document>,
{
    let mut builder = IndexBuilder::new(cfg.clone());
    for doc in docs {
        builder.add(doc)?;
    }
    Ok(builder.finish())
}

/// Reads one JSON document per line, skipping blank lines.
pub fn read_documents<R: BufRead>(reader: R) -> impl Iterator<Item = Result<Document>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::from(e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(
                serde_json::from_str::<Document>(&l)
                    .map_err(|e| Error::format(i + 1, e.to_string())),
            ),
        })
}

pub struct IndexBuilder {
    index: CorpusIndex,
    total: [u64; 2],
}

impl IndexBuilder {
    pub fn new(cfg: TokenConfig) -> Self {
        IndexBuilder {
            index: CorpusIndex {
                token_config: cfg,
                idf_options: IdfOptions::default(),
                terms: Vec::new(),
                doc_ids: Vec::new(),
                docs: Vec::new(),
                df: Vec::new(),
                postings: Vec::new(),
                avg_len: AvgLengths::default(),
                term_lookup: HashMap::new(),
                doc_lookup: HashMap::new(),
            },
            total: [0; 2],
        }
    }

    pub fn add(&mut self, doc: Document) -> Result<()> {
        if doc.doc_id.is_empty() {
            return Err(Error::EmptyDocId);
        }
        if doc.title.trim().is_empty() && doc.abstract_text.trim().is_empty() {
            return Err(Error::EmptyDocument(doc.doc_id));
        }
        let ix = &mut self.index;
        let doc_no = ix.doc_ids.len() as u32;
        match ix.doc_lookup.entry(doc.doc_id.clone()) {
            Entry::Occupied(_) => return Err(Error::DuplicateDocId(doc.doc_id)),
            Entry::Vacant(v) => {
                v.insert(doc_no);
            }
        }

        let title = tokenize(&doc.title, &ix.token_config);
        let abstract_ = tokenize(&doc.abstract_text, &ix.token_config);
        let title_tf = ix.count_terms(&title);
        let abstract_tf = ix.count_terms(&abstract_);
        let both = merge_counts(&title_tf, &abstract_tf);

        for &(term, _) in &both {
            let t = term as usize;
            let in_title = lookup_tf(&title_tf, term);
            let in_abstract = lookup_tf(&abstract_tf, term);
            let df = &mut ix.df[t];
            df.combined += 1;
            df.title += u32::from(in_title > 0);
            df.abstract_ += u32::from(in_abstract > 0);
            ix.postings[t].push(Posting {
                doc: doc_no,
                title_tf: in_title,
                abstract_tf: in_abstract,
            });
        }

        self.total[0] += title.len() as u64;
        self.total[1] += abstract_.len() as u64;
        ix.doc_ids.push(doc.doc_id);
        ix.docs.push(DocEntry {
            title: title_tf,
            abstract_: abstract_tf,
            both,
            title_len: title.len() as u32,
            abstract_len: abstract_.len() as u32,
        });
        Ok(())
    }

    pub fn finish(mut self) -> CorpusIndex {
        let n = self.index.docs.len();
        if n > 0 {
            let n = n as f64;
            self.index.avg_len = AvgLengths {
                title: self.total[0] as f64 / n,
                abstract_: self.total[1] as f64 / n,
                combined: (self.total[0] + self.total[1]) as f64 / n,
            };
        }
        self.index
    }
}

fn lookup_tf(counts: &[(TermId, u32)], term: TermId) -> u32 {
    counts
        .binary_search_by_key(&term, |&(t, _)| t)
        .map(|i| counts[i].1)
        .unwrap_or(0)
}

fn merge_counts(a: &[(TermId, u32)], b: &[(TermId, u32)]) -> Vec<(TermId, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Natural-log idf with +0.5 smoothing on both counts.
pub fn idf_value(num_docs: u32, doc_freq: u32) -> f64 {
    let k = num_docs as f64;
    let ki = doc_freq as f64;
    ((k - ki + 0.5) / (ki + 0.5)).ln()
}

impl CorpusIndex {
    fn count_terms(&mut self, tokens: &[String]) -> Vec<(TermId, u32)> {
        let mut counts: HashMap<TermId, u32> = HashMap::new();
        for tok in tokens {
            let id = match self.term_lookup.get(tok) {
                Some(&id) => id,
                None => {
                    let id = self.terms.len() as TermId;
                    self.terms.push(tok.clone());
                    self.term_lookup.insert(tok.clone(), id);
                    self.df.push(FieldCounts::default());
                    self.postings.push(Vec::new());
                    id
                }
            };
            *counts.entry(id).or_default() += 1;
        }
        let mut counts: Vec<_> = counts.into_iter().collect();
        counts.sort_unstable();
        counts
    }

    /// Number of documents, `K`.
    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn token_config(&self) -> &TokenConfig {
        &self.token_config
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.token_config)
    }

    pub fn idf_options(&self) -> IdfOptions {
        self.idf_options
    }

    pub fn set_idf_options(&mut self, opts: IdfOptions) {
        self.idf_options = opts;
    }

    pub fn with_idf_options(mut self, opts: IdfOptions) -> Self {
        self.idf_options = opts;
        self
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.doc_ids[doc]
    }

    pub fn doc_index(&self, doc_id: &str) -> Option<usize> {
        self.doc_lookup.get(doc_id).map(|&d| d as usize)
    }

    /// Term frequencies of one document field, sorted by term id.
    pub fn doc_terms(&self, doc: usize, field: Field) -> &[(TermId, u32)] {
        let entry = &self.docs[doc];
        match field {
            Field::Title => &entry.title,
            Field::Abstract => &entry.abstract_,
            Field::Both => &entry.both,
        }
    }

    pub fn tf(&self, doc: usize, field: Field, term: TermId) -> u32 {
        lookup_tf(self.doc_terms(doc, field), term)
    }

    pub fn doc_len(&self, doc: usize, field: Field) -> u32 {
        let entry = &self.docs[doc];
        match field {
            Field::Title => entry.title_len,
            Field::Abstract => entry.abstract_len,
            Field::Both => entry.title_len + entry.abstract_len,
        }
    }

    pub fn avg_len(&self, field: Field) -> f64 {
        match field {
            Field::Title => self.avg_len.title,
            Field::Abstract => self.avg_len.abstract_,
            Field::Both => self.avg_len.combined,
        }
    }

    pub fn df(&self, term: TermId) -> FieldCounts {
        self.df[term as usize]
    }

    /// Document frequency of `term` under the index's idf source; 0 when unseen.
    pub fn doc_freq(&self, term: &str) -> u32 {
        self.term_id(term)
            .map(|id| self.doc_freq_by_id(id))
            .unwrap_or(0)
    }

    pub fn doc_freq_by_id(&self, term: TermId) -> u32 {
        let df = self.df[term as usize];
        match self.idf_options.source {
            DfSource::Combined => df.combined,
            DfSource::Title => df.title,
            DfSource::Abstract => df.abstract_,
        }
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        &self.postings[term as usize]
    }

    pub fn idf(&self, term: &str) -> Result<f64> {
        self.idf_from_df(self.doc_freq(term))
    }

    pub fn idf_by_id(&self, term: TermId) -> Result<f64> {
        self.idf_from_df(self.doc_freq_by_id(term))
    }

    fn idf_from_df(&self, df: u32) -> Result<f64> {
        if self.doc_ids.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let v = idf_value(self.doc_ids.len() as u32, df);
        Ok(if self.idf_options.clamp_negative {
            v.max(0.0)
        } else {
            v
        })
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        bincode::serialize_into(writer, self)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let mut index: CorpusIndex = bincode::deserialize_from(reader)?;
        index.rebuild_lookups();
        Ok(index)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(bincode::serialize(self)?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::load(bytes)
    }

    fn rebuild_lookups(&mut self) {
        self.term_lookup = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        self.doc_lookup = self
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as u32))
            .collect();
    }
}

/// `ln((K - k_i + 0.5) / (k_i + 0.5))` for `term` against the index.
pub fn idf(index: &CorpusIndex, term: &str) -> Result<f64> {
    index.idf(term)
}
