use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::scoring::ScoredDoc;
use crate::{Error, Result};

/// A query with graded judgments. Every document in `grades` counts as judged,
/// including grade 0.
#[derive(Clone, Debug, PartialEq)]
pub struct JudgedQuery {
    pub query_id: String,
    pub query: String,
    grades: BTreeMap<String, f64>,
}

impl JudgedQuery {
    pub fn new<I>(query_id: impl Into<String>, query: impl Into<String>, grades: I) -> Self
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        JudgedQuery {
            query_id: query_id.into(),
            query: query.into(),
            grades: grades.into_iter().collect(),
        }
    }

    pub fn grades(&self) -> &BTreeMap<String, f64> {
        &self.grades
    }

    pub fn set_grade(&mut self, doc_id: impl Into<String>, grade: f64) {
        self.grades.insert(doc_id.into(), grade);
    }

    pub fn grade(&self, doc_id: &str) -> Option<f64> {
        self.grades.get(doc_id).copied()
    }

    pub fn is_judged(&self, doc_id: &str) -> bool {
        self.grades.contains_key(doc_id)
    }

    pub fn is_relevant(&self, doc_id: &str) -> bool {
        self.grade(doc_id).is_some_and(|g| g > 0.0)
    }

    pub fn num_relevant(&self) -> usize {
        self.grades.values().filter(|&&g| g > 0.0).count()
    }

    pub fn relevant(&self) -> impl Iterator<Item = &str> {
        self.grades
            .iter()
            .filter(|(_, &g)| g > 0.0)
            .map(|(d, _)| d.as_str())
    }
}

/// Judgments keyed by query id.
pub type Judgments = BTreeMap<String, JudgedQuery>;

/// Ranked document ids keyed by query id.
pub type Run = BTreeMap<String, Vec<String>>;

/// Reads `qid 0 doc_id grade` lines.
pub fn read_qrels<R: BufRead>(reader: R) -> Result<Judgments> {
    let mut out = Judgments::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, doc, grade] = fields[..] else {
            return Err(Error::format(i + 1, "expected `qid 0 doc_id grade`"));
        };
        let grade: f64 = grade
            .parse()
            .map_err(|_| Error::format(i + 1, format!("bad grade `{grade}`")))?;
        if !(grade.is_finite() && grade >= 0.0) {
            return Err(Error::format(
                i + 1,
                format!("grade must be >= 0, got {grade}"),
            ));
        }
        out.entry(qid.to_string())
            .or_insert_with(|| JudgedQuery::new(qid, "", []))
            .set_grade(doc, grade);
    }
    Ok(out)
}

/// Writes qrels with grades at four decimal places, ordered by query then doc.
pub fn write_qrels<'a, W, I>(mut w: W, judgments: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a JudgedQuery>,
{
    for jq in judgments {
        for (doc, grade) in &jq.grades {
            writeln!(w, "{} 0 {} {:.4}", jq.query_id, doc, grade)?;
        }
    }
    Ok(())
}

/// Reads `qid<TAB>query text` lines, in file order.
pub fn read_queries<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(i + 1, "expected `qid<TAB>query`"))?;
        out.push((qid.trim().to_string(), text.trim().to_string()));
    }
    Ok(out)
}

pub fn write_queries<'a, W, I>(mut w: W, queries: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    for (qid, text) in queries {
        writeln!(w, "{qid}\t{text}")?;
    }
    Ok(())
}

/// Reads a TREC run (`qid Q0 doc_id rank score tag`), ordering each query's
/// documents by rank.
pub fn read_run<R: BufRead>(reader: R) -> Result<Run> {
    let mut ranked: BTreeMap<String, Vec<(u64, String)>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, doc, rank, score, _] = fields[..] else {
            return Err(Error::format(
                i + 1,
                "expected `qid Q0 doc_id rank score tag`",
            ));
        };
        let rank: u64 = rank
            .parse()
            .map_err(|_| Error::format(i + 1, format!("bad rank `{rank}`")))?;
        score
            .parse::<f64>()
            .map_err(|_| Error::format(i + 1, format!("bad score `{score}`")))?;
        ranked
            .entry(qid.to_string())
            .or_default()
            .push((rank, doc.to_string()));
    }
    Ok(ranked
        .into_iter()
        .map(|(qid, mut docs)| {
            docs.sort();
            let mut seen = HashMap::new();
            let docs = docs
                .into_iter()
                .filter(|(_, d)| seen.insert(d.clone(), ()).is_none())
                .map(|(_, d)| d)
                .collect();
            (qid, docs)
        })
        .collect())
}

/// Writes one query's results in TREC run format, ranks starting at 1.
pub fn write_run<W: Write>(mut w: W, qid: &str, results: &[ScoredDoc], tag: &str) -> Result<()> {
    for (r, doc) in results.iter().enumerate() {
        writeln!(
            w,
            "{qid} Q0 {} {} {:.6} {tag}",
            doc.doc_id,
            r + 1,
            doc.score
        )?;
    }
    Ok(())
}
