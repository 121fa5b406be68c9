use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::FeatureSchema;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingInstance {
    pub query_id: String,
    pub doc_id: String,
    pub features: Vec<f64>,
    pub label: f64,
}

const SCHEMA_PREFIX: &str = "# schema:";

/// Writes LETOR/SVMlight lines `<label> qid:<qid> 1:<v1> 2:<v2> # <doc_id>`,
/// preceded by a `# schema:` comment naming the features.
pub fn write_letor<W: Write>(
    mut w: W,
    schema: &FeatureSchema,
    instances: &[TrainingInstance],
) -> Result<()> {
    writeln!(w, "{SCHEMA_PREFIX} {}", schema.names().join(" "))?;
    for inst in instances {
        write!(w, "{} qid:{}", inst.label, inst.query_id)?;
        for (i, v) in inst.features.iter().enumerate() {
            write!(w, " {}:{}", i + 1, v)?;
        }
        writeln!(w, " # {}", inst.doc_id)?;
    }
    Ok(())
}

/// (query id, doc id, sparse features, label) before the schema is known.
type RawRow = (String, String, Vec<(usize, f64)>, f64);

/// Reads a LETOR/SVMlight feature file. Missing feature indices are 0. Without
/// a `# schema:` header the features are named `f1..fn`. Other `#` lines are
/// ignored.
pub fn read_letor<R: BufRead>(reader: R) -> Result<(FeatureSchema, Vec<TrainingInstance>)> {
    let mut schema: Option<FeatureSchema> = None;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut max_index = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(SCHEMA_PREFIX) {
            schema = Some(
                rest.split_whitespace()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
                    .into(),
            );
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (body, comment) = match line.split_once('#') {
            Some((b, c)) => (b, c.trim()),
            None => (line, ""),
        };
        let mut fields = body.split_whitespace();
        let label_text = fields.next().unwrap_or_default();
        let label: f64 = label_text
            .parse()
            .map_err(|_| Error::format(line_no, format!("bad label `{label_text}`")))?;
        let qid = fields
            .next()
            .and_then(|f| f.strip_prefix("qid:"))
            .ok_or_else(|| Error::format(line_no, "missing qid:<id>"))?
            .to_string();
        let mut feats = Vec::new();
        for f in fields {
            let (k, v) = f
                .split_once(':')
                .ok_or_else(|| Error::format(line_no, format!("bad feature `{f}`")))?;
            let k: usize = k
                .parse()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::format(line_no, format!("bad feature index `{k}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::format(line_no, format!("bad feature value `{v}`")))?;
            max_index = max_index.max(k);
            feats.push((k, v));
        }
        let doc_id = if comment.is_empty() {
            format!("{qid}-{}", rows.len())
        } else {
            comment.to_string()
        };
        rows.push((qid, doc_id, feats, label));
    }
    let schema = schema.unwrap_or_else(|| FeatureSchema::anonymous(max_index));
    if max_index > schema.len() {
        return Err(Error::SchemaMismatch {
            expected: schema.describe(),
            found: format!("feature index {max_index}"),
        });
    }
    let instances = rows
        .into_iter()
        .map(|(query_id, doc_id, feats, label)| {
            let mut features = vec![0.0; schema.len()];
            for (k, v) in feats {
                features[k - 1] = v;
            }
            TrainingInstance {
                query_id,
                doc_id,
                features,
                label,
            }
        })
        .collect();
    Ok((schema, instances))
}

/// Seeded query-level split: the first `round(fraction * n)` of the shuffled
/// distinct query ids train, the rest test. Both halves come back sorted.
pub fn split_queries<S: AsRef<str>>(
    query_ids: &[S],
    train_fraction: f64,
    seed: u64,
) -> (Vec<String>, Vec<String>) {
    let mut ids: Vec<String> = query_ids
        .iter()
        .map(|q| q.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = ((ids.len() as f64) * train_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut test = ids.split_off(n_train);
    ids.sort();
    test.sort();
    (ids, test)
}
