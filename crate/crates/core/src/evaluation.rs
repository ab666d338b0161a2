//! Scoring of QA predictions under exact match (EM) and LLM-assisted
//! semantic match (LASM).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dataset::InstanceRecord;
use crate::kg::split_surface;
use crate::llm::{ChatProvider, ChatRequest, LlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Em,
    Lasm,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(MatchMode::Em),
            "lasm" => Ok(MatchMode::Lasm),
            other => Err(format!("unknown match mode {other:?} (expected em or lasm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    /// Rank order; index 0 is the top answer.
    pub predictions: Vec<String>,
}

/// Pairs of `(prediction index, gold index)`, one-to-one on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub id: String,
    pub pairs: Vec<(usize, usize)>,
    pub mode: MatchMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub hit1: f64,
    pub accuracy: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("prediction for unknown id {0:?}")]
    UnknownId(String),
    #[error("no instances to aggregate")]
    Empty,
    #[error("judge failed: {0}")]
    Judge(#[from] LlmError),
    #[error("judge returned an unusable verdict: {0:?}")]
    Verdict(String),
}

/// Lowercased, trimmed, whitespace-collapsed, minus one trailing `(Q…)`.
pub fn normalize(answer: &str) -> String {
    let base = match split_surface(answer) {
        (label, Some(id)) if id.starts_with('Q') => label,
        _ => answer.to_string(),
    };
    base.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Multiset intersection on normalized strings, predictions in rank order.
pub fn match_em(preds: &[String], gold: &[String]) -> Vec<(usize, usize)> {
    let gold_norm: Vec<String> = gold.iter().map(|g| normalize(g)).collect();
    let mut used = vec![false; gold.len()];
    let mut pairs = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        let p = normalize(p);
        if let Some(j) = (0..gold.len()).find(|&j| !used[j] && gold_norm[j] == p) {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheLine {
    prediction: String,
    gold: String,
    verdict: bool,
}

/// Persistent `(prediction, gold) -> verdict` map backed by append-only JSONL.
#[derive(Debug, Default)]
pub struct JudgeCache {
    path: Option<PathBuf>,
    verdicts: Mutex<HashMap<(String, String), bool>>,
}

impl JudgeCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists; new verdicts are appended to it.
    pub fn open(path: &Path) -> Result<Self, EvalError> {
        let mut verdicts = HashMap::new();
        match std::fs::read_to_string(path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let l: CacheLine = serde_json::from_str(line).map_err(|e| EvalError::Format {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                    // First verdict wins; later duplicates are ignored.
                    verdicts.entry((l.prediction, l.gold)).or_insert(l.verdict);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(EvalError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        }
        Ok(JudgeCache {
            path: Some(path.to_path_buf()),
            verdicts: Mutex::new(verdicts),
        })
    }

    pub fn get(&self, prediction: &str, gold: &str) -> Option<bool> {
        self.verdicts
            .lock()
            .expect("cache lock")
            .get(&(prediction.to_string(), gold.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.verdicts.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a verdict unless one exists already; existing ones never change.
    pub fn insert(&self, prediction: &str, gold: &str, verdict: bool) -> Result<(), EvalError> {
        let mut map = self.verdicts.lock().expect("cache lock");
        let key = (prediction.to_string(), gold.to_string());
        if map.contains_key(&key) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            let io = |source| EvalError::Io {
                path: path.clone(),
                source,
            };
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
            let line = serde_json::to_string(&CacheLine {
                prediction: key.0.clone(),
                gold: key.1.clone(),
                verdict,
            })
            .expect("cache line serializes");
            writeln!(f, "{line}").map_err(io)?;
        }
        map.insert(key, verdict);
        Ok(())
    }
}

pub const JUDGE_TEMPLATE: &str = "In the context of the question \"{question}\", does the answer \"{prediction}\" refer to the same thing as the answer \"{gold}\"? Reply with exactly one word: yes or no.";

/// LLM judge of semantic equivalence with a verdict cache. The cache key is
/// the normalized pair only; the question is context for the model.
pub struct Judge<'a> {
    provider: &'a dyn ChatProvider,
    model: String,
    cache: &'a JudgeCache,
    calls: AtomicU64,
    hits: AtomicU64,
}

fn parse_verdict(text: &str) -> Result<bool, EvalError> {
    let word: String = text
        .trim()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(EvalError::Verdict(text.chars().take(80).collect())),
    }
}

impl<'a> Judge<'a> {
    pub fn new(provider: &'a dyn ChatProvider, model: impl Into<String>, cache: &'a JudgeCache) -> Self {
        Judge {
            provider,
            model: model.into(),
            cache,
            calls: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn equivalent(&self, question: &str, prediction: &str, gold: &str) -> Result<bool, EvalError> {
        let (p, g) = (normalize(prediction), normalize(gold));
        if let Some(v) = self.cache.get(&p, &g) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let prompt = crate::llm::fill(
            JUDGE_TEMPLATE,
            &[
                ("question", question),
                ("prediction", prediction.trim()),
                ("gold", gold.trim()),
            ],
        );
        let verdict = parse_verdict(&self.provider.complete(&ChatRequest::user(&self.model, prompt))?)?;
        self.cache.insert(&p, &g, verdict)?;
        Ok(verdict)
    }
}

/// Starts from the EM pairing; each unmatched prediction (rank order) is
/// bound to the first unmatched gold answer the judge accepts.
pub fn match_lasm(
    question: &str,
    preds: &[String],
    gold: &[String],
    judge: &Judge<'_>,
) -> Result<Vec<(usize, usize)>, EvalError> {
    let mut pairs = match_em(preds, gold);
    let mut pred_used: HashSet<usize> = pairs.iter().map(|p| p.0).collect();
    let mut gold_used: HashSet<usize> = pairs.iter().map(|p| p.1).collect();
    for (i, p) in preds.iter().enumerate() {
        if pred_used.contains(&i) {
            continue;
        }
        for (j, g) in gold.iter().enumerate() {
            if gold_used.contains(&j) {
                continue;
            }
            if judge.equivalent(question, p, g)? {
                pairs.push((i, j));
                pred_used.insert(i);
                gold_used.insert(j);
                break;
            }
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

pub fn score_instance(pairs: &[(usize, usize)], n_preds: usize, n_gold: usize) -> InstanceScores {
    let m = pairs.len() as f64;
    let precision = if n_preds == 0 { 0.0 } else { m / n_preds as f64 };
    let recall = if n_gold == 0 { 0.0 } else { m / n_gold as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let hit1 = if pairs.iter().any(|&(i, _)| i == 0) { 1.0 } else { 0.0 };
    InstanceScores {
        precision,
        recall,
        f1,
        hit1,
        accuracy: recall,
    }
}

/// Macro averages ×100, rounded to two decimals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub accuracy: f64,
    pub hit1: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

fn pct(sum: f64, n: usize) -> f64 {
    (sum / n as f64 * 10_000.0).round() / 100.0
}

pub fn aggregate(scores: &[InstanceScores]) -> Result<MetricValues, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = scores.len();
    let sum = |f: fn(&InstanceScores) -> f64| scores.iter().map(f).sum::<f64>();
    Ok(MetricValues {
        accuracy: pct(sum(|s| s.accuracy), n),
        hit1: pct(sum(|s| s.hit1), n),
        f1: pct(sum(|s| s.f1), n),
        precision: pct(sum(|s| s.precision), n),
        recall: pct(sum(|s| s.recall), n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mode: MatchMode,
    pub instances: usize,
    pub metrics: MetricValues,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judge_calls: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_hits: Option<u64>,
}

/// EM always; LASM when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub em: MetricReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lasm: Option<MetricReport>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "Mode", "Instances", "Accuracy", "Hit@1", "F1", "Precision", "Recall"
        )?;
        for r in std::iter::once(&self.em).chain(self.lasm.as_ref()) {
            let m = &r.metrics;
            writeln!(
                f,
                "{:<6} {:>9} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
                if r.mode == MatchMode::Em { "EM" } else { "LASM" },
                r.instances,
                m.accuracy,
                m.hit1,
                m.f1,
                m.precision,
                m.recall
            )?;
        }
        if let Some(l) = &self.lasm {
            writeln!(
                f,
                "judge calls: {}, cache hits: {}",
                l.judge_calls.unwrap_or(0),
                l.cache_hits.unwrap_or(0)
            )?;
        }
        Ok(())
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: PredictionRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !seen.insert(rec.id.clone()) {
            return Err(err(format!("duplicate id {:?}", rec.id)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Scores every gold instance; gold ids without a prediction count as empty
/// prediction lists.
pub fn evaluate(
    gold: &[InstanceRecord],
    predictions: &[PredictionRecord],
    judge: Option<&Judge<'_>>,
) -> Result<EvalReport, EvalError> {
    let gold_ids: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    if let Some(p) = predictions.iter().find(|p| !gold_ids.contains(p.id.as_str())) {
        return Err(EvalError::UnknownId(p.id.clone()));
    }
    let by_id: HashMap<&str, &[String]> = predictions
        .iter()
        .map(|p| (p.id.as_str(), p.predictions.as_slice()))
        .collect();

    let mut em = Vec::with_capacity(gold.len());
    let mut lasm = Vec::with_capacity(gold.len());
    for g in gold {
        let preds = by_id.get(g.id.as_str()).copied().unwrap_or(&[]);
        em.push(score_instance(
            &match_em(preds, &g.answers),
            preds.len(),
            g.answers.len(),
        ));
        if let Some(judge) = judge {
            let pairs = match_lasm(&g.question, preds, &g.answers, judge)?;
            lasm.push(score_instance(&pairs, preds.len(), g.answers.len()));
        }
    }
    Ok(EvalReport {
        em: MetricReport {
            mode: MatchMode::Em,
            instances: gold.len(),
            metrics: aggregate(&em)?,
            judge_calls: None,
            cache_hits: None,
        },
        lasm: match judge {
            Some(j) => Some(MetricReport {
                mode: MatchMode::Lasm,
                instances: gold.len(),
                metrics: aggregate(&lasm)?,
                judge_calls: Some(j.calls()),
                cache_hits: Some(j.cache_hits()),
            }),
            None => None,
        },
    })
}
