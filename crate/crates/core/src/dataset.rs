//! Instance records on disk, deterministic splits and corpus statistics.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::kg::EntityId;

/// Placeholder timestamp written by deterministic runs.
pub const EPOCH: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRef {
    pub label: String,
    pub qid: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordMeta {
    pub iterations: u32,
    /// Revisions used by the verifier; `None` until validated.
    pub validation_attempts: Option<u32>,
    pub model: String,
    pub created_at: String,
}

/// One QA instance as stored in JSONL. Field order is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub id: String,
    pub seed: SeedRef,
    pub question: String,
    /// `"<label> (<QID>)"` or bare literal strings.
    pub answers: Vec<String>,
    pub proof: Vec<[String; 3]>,
    pub sparql: String,
    pub meta: RecordMeta,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate record id {id:?}")]
    DuplicateId { id: String },
    #[error("infeasible split: {0}")]
    Split(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl InstanceRecord {
    /// Invariants of a stored record; `allow_empty_sparql` admits raw
    /// candidates whose query could not be synthesized.
    pub fn check(&self, allow_empty_sparql: bool) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.question.trim().is_empty() {
            return Err("empty question".into());
        }
        if self.answers.is_empty() {
            return Err("answers must be non-empty".into());
        }
        if self.proof.is_empty() {
            return Err("proof must be non-empty".into());
        }
        if !allow_empty_sparql && self.sparql.trim().is_empty() {
            return Err("sparql must be non-empty".into());
        }
        Ok(())
    }
}

/// Writes one record per line; ids must be unique.
pub fn write_jsonl(records: &[InstanceRecord], path: &Path) -> Result<usize, DatasetError> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(DatasetError::DuplicateId { id: r.id.clone() });
        }
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(records.len())
}

fn read_records(path: &Path, allow_empty_sparql: bool) -> Result<Vec<InstanceRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let schema = |line: usize, message: String| DatasetError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord = serde_json::from_str(line).map_err(|e| schema(n, e.to_string()))?;
        record.check(allow_empty_sparql).map_err(|m| schema(n, m))?;
        if !seen.insert(record.id.clone()) {
            return Err(schema(n, format!("duplicate id {:?}", record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

/// Reads validated records; rejects schema violations and duplicate ids.
pub fn read_jsonl(path: &Path) -> Result<Vec<InstanceRecord>, DatasetError> {
    read_records(path, false)
}

/// Like [`read_jsonl`] but admits an empty `sparql` (raw generator output).
pub fn read_candidates(path: &Path) -> Result<Vec<InstanceRecord>, DatasetError> {
    read_records(path, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub dev_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            dev_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Round half up; `x` is non-negative here.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Partition sizes `(train, dev, test)` for `n` records.
pub fn split_sizes(n: usize, spec: &SplitSpec) -> Result<(usize, usize, usize), DatasetError> {
    let (d, t) = (spec.dev_fraction, spec.test_fraction);
    if !(d > 0.0 && t > 0.0 && d + t < 1.0) {
        return Err(DatasetError::Split(format!(
            "fractions must be positive with sum < 1 (got {d} + {t})"
        )));
    }
    if n < 3 {
        return Err(DatasetError::Split(format!("need at least 3 records, got {n}")));
    }
    let dev = round_half_up(n as f64 * d);
    let test = round_half_up(n as f64 * t);
    if dev == 0 || test == 0 || dev + test >= n {
        return Err(DatasetError::Split(format!(
            "fractions {d}/{t} give dev={dev}, test={test} for {n} records"
        )));
    }
    Ok((n - dev - test, dev, test))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle, then dev and test are cut from the front.
pub fn split<T: Clone>(records: &[T], spec: &SplitSpec) -> Result<Split<T>, DatasetError> {
    let (_, dev, test) = split_sizes(records.len(), spec)?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok(Split {
        dev: pick(&order[..dev]),
        test: pick(&order[dev..dev + test]),
        train: pick(&order[dev + test..]),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    pub question_length: Vec<Bucket>,
    pub answer_count: Vec<Bucket>,
}

pub const LENGTH_BUCKETS: [&str; 3] = ["<=15 words", "16-30 words", ">=31 words"];
pub const ANSWER_BUCKETS: [&str; 3] = ["1 answer", "2 answers", ">=3 answers"];

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (count as f64 * 1000.0 / total as f64).round() / 10.0
}

fn buckets(labels: [&str; 3], counts: [usize; 3], total: usize) -> Vec<Bucket> {
    labels
        .iter()
        .zip(counts)
        .map(|(l, c)| Bucket {
            label: (*l).to_string(),
            count: c,
            percent: percent(c, total),
        })
        .collect()
}

pub fn length_bucket(question: &str) -> usize {
    match question.split_whitespace().count() {
        0..=15 => 0,
        16..=30 => 1,
        _ => 2,
    }
}

pub fn answer_bucket(n: usize) -> usize {
    n.clamp(1, 3) - 1
}

/// Statistics over `(question, answer count)` pairs.
pub fn stats_from_pairs<'a>(items: impl IntoIterator<Item = (&'a str, usize)>) -> DatasetStats {
    let mut len = [0usize; 3];
    let mut ans = [0usize; 3];
    let mut count = 0;
    for (q, n) in items {
        count += 1;
        len[length_bucket(q)] += 1;
        ans[answer_bucket(n)] += 1;
    }
    DatasetStats {
        count,
        question_length: buckets(LENGTH_BUCKETS, len, count),
        answer_count: buckets(ANSWER_BUCKETS, ans, count),
    }
}

pub fn stats(records: &[InstanceRecord]) -> DatasetStats {
    stats_from_pairs(records.iter().map(|r| (r.question.as_str(), r.answers.len())))
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.count)?;
        for (title, rows) in [
            ("question length", &self.question_length),
            ("answers", &self.answer_count),
        ] {
            writeln!(f, "{title}")?;
            for b in rows {
                writeln!(f, "  {:<14} {:>7} {:>6.1}%", b.label, b.count, b.percent)?;
            }
        }
        Ok(())
    }
}

/// Pulls `(question, answer count)` out of an arbitrary JSON object, trying
/// the common field spellings of published QA datasets.
fn loose_pair(obj: &Value) -> Option<(String, usize)> {
    let question = ["question", "Question", "query"]
        .iter()
        .find_map(|k| obj.get(*k).and_then(Value::as_str))?
        .to_string();
    let answers = ["answers", "answer", "Answer", "answer_list"]
        .iter()
        .find_map(|k| obj.get(*k))?;
    let n = match answers {
        Value::Array(a) => a.len(),
        Value::Null => 0,
        Value::String(s) => match serde_json::from_str::<Value>(s) {
            Ok(Value::Array(a)) => a.len(),
            _ => 1,
        },
        _ => 1,
    };
    Some((question, n))
}

/// Loads `(question, answer count)` pairs from a JSONL file or a JSON array,
/// accepting any record shape with a question and an answer list.
pub fn read_loose_pairs(path: &Path) -> Result<Vec<(String, usize)>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let schema = |line: usize, message: String| DatasetError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let trimmed = text.trim_start();
    let objects: Vec<(usize, Value)> = if trimmed.starts_with('[') {
        match serde_json::from_str::<Value>(trimmed) {
            Ok(Value::Array(items)) => items.into_iter().map(|v| (1, v)).collect(),
            Ok(_) => return Err(schema(1, "expected a JSON array".into())),
            Err(e) => return Err(schema(e.line(), e.to_string())),
        }
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<Value>(l)
                    .map(|v| (i + 1, v))
                    .map_err(|e| schema(i + 1, e.to_string()))
            })
            .collect::<Result<_, _>>()?
    };
    objects
        .into_iter()
        .map(|(line, v)| loose_pair(&v).ok_or_else(|| schema(line, "record lacks a question or answer field".into())))
        .collect()
}
