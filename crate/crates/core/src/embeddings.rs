//! Word embedding tables in word2vec text and binary layouts.
//!
//! Rows are unit-normalized at load time, so cosine similarity is a plain dot
//! product everywhere downstream.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    #[default]
    Text,
    Binary,
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(EmbeddingFormat::Text),
            "binary" | "bin" => Ok(EmbeddingFormat::Binary),
            other => Err(Error::invalid("embedding format", other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    lookup: HashMap<String, u32>,
    data: Vec<f32>,
    dropped_zero_norm: usize,
    duplicates: usize,
}

impl EmbeddingTable {
    /// Builds a table from raw vectors, normalizing each row. Zero-norm rows are
    /// dropped and counted; repeated words keep their first vector.
    pub fn from_vectors<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable::empty(dim)?;
        for (word, v) in rows {
            let word = word.into();
            if v.len() != dim {
                return Err(Error::invalid(
                    "embedding row",
                    format!("`{word}` has {} values, expected {dim}", v.len()),
                ));
            }
            table.push(word, &v);
        }
        table.warn_dropped();
        Ok(table)
    }

    fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension", "must be at least 1"));
        }
        Ok(EmbeddingTable {
            dim,
            words: Vec::new(),
            lookup: HashMap::new(),
            data: Vec::new(),
            dropped_zero_norm: 0,
            duplicates: 0,
        })
    }

    fn push(&mut self, word: String, v: &[f32]) {
        let norm = v
            .iter()
            .map(|&x| (x as f64) * (x as f64))
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            self.dropped_zero_norm += 1;
            return;
        }
        if self.lookup.contains_key(&word) {
            self.duplicates += 1;
            return;
        }
        self.lookup.insert(word.clone(), self.words.len() as u32);
        self.words.push(word);
        self.data
            .extend(v.iter().map(|&x| (x as f64 / norm) as f32));
    }

    fn warn_dropped(&self) {
        if self.dropped_zero_norm > 0 {
            log::warn!(
                "dropped {} zero-norm embedding rows",
                self.dropped_zero_norm
            );
        }
        if self.duplicates > 0 {
            log::warn!("ignored {} repeated embedding words", self.duplicates);
        }
    }

    pub fn load<R: BufRead>(reader: R, format: EmbeddingFormat) -> Result<Self> {
        let table = match format {
            EmbeddingFormat::Text => parse_text(reader)?,
            EmbeddingFormat::Binary => parse_binary(reader)?,
        };
        table.warn_dropped();
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dropped_zero_norm(&self) -> usize {
        self.dropped_zero_norm
    }

    /// Rows skipped because their word was already loaded.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn row(&self, word: &str) -> Option<u32> {
        self.lookup.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains_key(word)
    }

    pub fn vector(&self, row: u32) -> &[f32] {
        let start = row as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.row(word).map(|r| self.vector(r))
    }

    /// Cosine between two stored rows. A row against itself is exactly 1.
    #[inline]
    pub fn cosine_rows(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 1.0;
        }
        dot(self.vector(a), self.vector(b))
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let ra = self
            .row(a)
            .ok_or_else(|| Error::OutOfVocabulary(a.to_string()))?;
        let rb = self
            .row(b)
            .ok_or_else(|| Error::OutOfVocabulary(b.to_string()))?;
        Ok(self.cosine_rows(ra, rb))
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for x in self.vector(i as u32) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes())?;
            w.write_all(b" ")?;
            for x in self.vector(i as u32) {
                w.write_all(&x.to_le_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Dot product accumulated in f64. Summation order depends only on the
/// element index, so `dot(a, b) == dot(b, a)` bit for bit.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rest_a, rest_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += x[k] as f64 * y[k] as f64;
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in rest_a.iter().zip(rest_b) {
        sum += *x as f64 * *y as f64;
    }
    sum
}

pub fn cosine(table: &EmbeddingTable, a: &str, b: &str) -> Result<f64> {
    table.cosine(a, b)
}

/// Mean of the unit vectors of in-vocabulary tokens, counted with multiplicity.
/// The result is not re-normalized.
pub fn centroid<S: AsRef<str>>(table: &EmbeddingTable, tokens: &[S]) -> Result<Vec<f64>> {
    centroid_with(table, tokens, true)
}

pub fn centroid_with<S: AsRef<str>>(
    table: &EmbeddingTable,
    tokens: &[S],
    multiplicity: bool,
) -> Result<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    let rows = tokens.iter().filter_map(|t| {
        let t = t.as_ref();
        if !multiplicity && !seen.insert(t) {
            return None;
        }
        table.row(t).map(|r| (r, 1))
    });
    centroid_of_rows(table, rows)
}

/// Weighted centroid over `(row, count)` pairs.
pub fn centroid_of_rows<I>(table: &EmbeddingTable, rows: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (u32, u32)>,
{
    let mut sum = vec![0f64; table.dim()];
    let mut n = 0u64;
    for (row, count) in rows {
        for (s, &x) in sum.iter_mut().zip(table.vector(row)) {
            *s += x as f64 * count as f64;
        }
        n += count as u64;
    }
    if n == 0 {
        return Err(Error::NoEmbeddableTokens);
    }
    let n = n as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

/// Plain cosine of two dense vectors; 0 when either has zero norm.
pub fn cosine_dense(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

fn parse_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| parse_err(0, format!("malformed header: missing {what}")))?
            .parse()
            .map_err(|_| parse_err(0, format!("malformed header: bad {what}")))
    };
    let vocab = next("vocabulary size")?;
    let dim = next("dimension")?;
    if parts.next().is_some() {
        return Err(parse_err(0, "malformed header: trailing fields"));
    }
    if dim == 0 {
        return Err(parse_err(
            0,
            "malformed header: dimension must be at least 1",
        ));
    }
    Ok((vocab, dim))
}

fn parse_text<R: BufRead>(mut reader: R) -> Result<EmbeddingTable> {
    let mut line = String::new();
    let mut offset = reader.read_line(&mut line)? as u64;
    if line.is_empty() {
        return Err(parse_err(0, "empty stream"));
    }
    let (vocab, dim) = parse_header(&line)?;
    let mut table = EmbeddingTable::empty(dim)?;
    let mut values = Vec::with_capacity(dim);
    let mut rows = 0;
    loop {
        line.clear();
        let start = offset;
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        offset += n as u64;
        if line.trim().is_empty() {
            continue;
        }
        if rows == vocab {
            return Err(parse_err(
                start,
                format!("more rows than the {vocab} declared"),
            ));
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap_or_default().to_string();
        values.clear();
        for f in fields {
            let v: f32 = f
                .parse()
                .map_err(|_| parse_err(start, format!("bad number `{f}` for `{word}`")))?;
            if !v.is_finite() {
                return Err(parse_err(start, format!("non-finite value for `{word}`")));
            }
            values.push(v);
        }
        if values.len() != dim {
            return Err(parse_err(
                start,
                format!(
                    "dimension mismatch for `{word}`: {} values, expected {dim}",
                    values.len()
                ),
            ));
        }
        table.push(word, &values);
        rows += 1;
    }
    if rows < vocab {
        return Err(parse_err(
            offset,
            format!("truncated stream: {rows} of {vocab} rows"),
        ));
    }
    Ok(table)
}

fn parse_binary<R: BufRead>(mut reader: R) -> Result<EmbeddingTable> {
    let mut header = Vec::new();
    let mut offset = reader.read_until(b'\n', &mut header)? as u64;
    if header.last() != Some(&b'\n') {
        return Err(parse_err(offset, "malformed header: missing newline"));
    }
    let header = std::str::from_utf8(&header).map_err(|_| parse_err(0, "malformed header"))?;
    let (vocab, dim) = parse_header(header)?;
    let mut table = EmbeddingTable::empty(dim)?;
    let mut word = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut values = vec![0f32; dim];
    for row in 0..vocab {
        // optional newline (or stray whitespace) after the previous vector block
        loop {
            let buf = reader.fill_buf()?;
            match buf.first() {
                Some(b'\n' | b'\r' | b' ') => {
                    reader.consume(1);
                    offset += 1;
                }
                Some(_) => break,
                None => {
                    return Err(parse_err(
                        offset,
                        format!("truncated stream: {row} of {vocab} rows"),
                    ))
                }
            }
        }
        word.clear();
        let start = offset;
        let n = reader.read_until(b' ', &mut word)?;
        offset += n as u64;
        if word.last() != Some(&b' ') {
            return Err(parse_err(start, "truncated stream inside a word"));
        }
        word.pop();
        let text = String::from_utf8_lossy(&word).into_owned();
        let mut filled = 0;
        while filled < raw.len() {
            let n = reader.read(&mut raw[filled..])?;
            if n == 0 {
                return Err(parse_err(
                    offset + filled as u64,
                    format!("truncated vector for `{text}`"),
                ));
            }
            filled += n;
        }
        for (v, b) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(parse_err(
                offset + 4 * bad as u64,
                format!("non-finite value for `{text}`"),
            ));
        }
        offset += raw.len() as u64;
        table.push(text, &values);
    }
    Ok(table)
}
