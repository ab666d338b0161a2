//! Batch commands behind the `kgqagen` binary: generate, verify, split,
//! stats and eval.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{self, InstanceRecord, SplitSpec};
use crate::evaluation::{self, EvalReport, Judge, JudgeCache, MatchMode};
use crate::http::RetryPolicy;
use crate::kg::{load_tsv, Direction};
use crate::llm::{ChatProvider, HttpProvider, HttpProviderConfig, ScriptedProvider};
use crate::pipeline::{self, AbandonReason, PipelineConfig};
use crate::sparql::{KgBackend, RemoteBackend, RemoteConfig};
use crate::verifier::{self, FailureClass, ValidationOutcome, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFRASTRUCTURE: i32 = 2;
pub const EXIT_NONE_ACCEPTED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("infrastructure failure: {0}")]
    Infrastructure(String),
    #[error("validation accepted no instances")]
    NoneAccepted,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infrastructure(_) => EXIT_INFRASTRUCTURE,
            CliError::NoneAccepted => EXIT_NONE_ACCEPTED,
        }
    }
}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KgMode {
    #[default]
    Memory,
    Remote,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KgBlock {
    pub mode: KgMode,
    /// TSV triple file for `memory` mode.
    pub fixture: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub user_agent: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub fetch_cap: Option<usize>,
    pub retry: Option<RetryPolicy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    #[default]
    Http,
    Scripted,
}

/// Response scripts per command for `scripted` mode.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptPaths {
    pub generate: Option<PathBuf>,
    pub verify: Option<PathBuf>,
    pub judge: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmBlock {
    pub mode: LlmMode,
    pub base_url: String,
    pub api_key_env: String,
    pub generator_model: String,
    pub revision_model: String,
    pub judge_model: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub requests_per_minute: u32,
    pub retry: RetryPolicy,
    pub scripts: ScriptPaths,
}

impl Default for LlmBlock {
    fn default() -> Self {
        let http = HttpProviderConfig::default();
        LlmBlock {
            mode: LlmMode::Http,
            base_url: http.base_url,
            api_key_env: http.api_key_env,
            generator_model: "gpt-4.1".into(),
            revision_model: "gpt-4.1-mini".into(),
            judge_model: "gpt-4o-mini".into(),
            timeout_secs: http.timeout_secs,
            max_in_flight: http.max_in_flight,
            requests_per_minute: http.requests_per_minute,
            retry: http.retry,
            scripts: ScriptPaths::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineBlock {
    pub init_k: usize,
    pub expand_k: usize,
    pub max_iterations: u32,
    pub max_subgraph_triples: usize,
    pub direction: Direction,
    pub rng_seed: u64,
    pub max_revisions: u32,
}

impl Default for PipelineBlock {
    fn default() -> Self {
        let p = PipelineConfig::default();
        PipelineBlock {
            init_k: p.init_k,
            expand_k: p.expand_k,
            max_iterations: p.max_iterations,
            max_subgraph_triples: p.max_subgraph_triples,
            direction: p.direction,
            rng_seed: p.rng_seed,
            max_revisions: VerifyOptions::default().max_attempts,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsBlock {
    pub seeds: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub kg: KgBlock,
    pub llm: LlmBlock,
    pub pipeline: PipelineBlock,
    pub paths: PathsBlock,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn must_exist(what: &str, p: &Option<PathBuf>) -> Result<(), CliError> {
    match p {
        Some(path) if !path.is_file() => Err(CliError::Config(format!("{what} {} does not exist", path.display()))),
        _ => Ok(()),
    }
}

impl Config {
    /// Parses the JSON config; relative paths are taken from the config's
    /// directory and referenced input files must exist.
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Config =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.kg.fixture);
        resolve(base, &mut cfg.llm.scripts.generate);
        resolve(base, &mut cfg.llm.scripts.verify);
        resolve(base, &mut cfg.llm.scripts.judge);
        resolve(base, &mut cfg.paths.seeds);
        resolve(base, &mut cfg.paths.output_dir);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), CliError> {
        match self.kg.mode {
            KgMode::Memory if self.kg.fixture.is_none() => {
                return Err(CliError::Config("kg.fixture is required in memory mode".into()))
            }
            KgMode::Remote if self.kg.user_agent.as_deref().is_none_or(|u| u.trim().is_empty()) => {
                return Err(CliError::Config("kg.user_agent is required in remote mode".into()))
            }
            _ => {}
        }
        must_exist("kg.fixture", &self.kg.fixture)?;
        must_exist("llm.scripts.generate", &self.llm.scripts.generate)?;
        must_exist("llm.scripts.verify", &self.llm.scripts.verify)?;
        must_exist("llm.scripts.judge", &self.llm.scripts.judge)?;
        must_exist("paths.seeds", &self.paths.seeds)?;
        self.pipeline_config(false).check().map_err(CliError::Config)?;
        if self.pipeline.max_revisions == 0 {
            return Err(CliError::Config("pipeline.max_revisions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn pipeline_config(&self, deterministic: bool) -> PipelineConfig {
        let p = &self.pipeline;
        PipelineConfig {
            init_k: p.init_k,
            expand_k: p.expand_k,
            max_iterations: p.max_iterations,
            max_subgraph_triples: p.max_subgraph_triples,
            rng_seed: p.rng_seed,
            generator_model: self.llm.generator_model.clone(),
            direction: p.direction,
            zero_timestamps: deterministic,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            revision_model: self.llm.revision_model.clone(),
            max_attempts: self.pipeline.max_revisions,
        }
    }

    pub fn backend(&self) -> Result<Box<dyn KgBackend>, CliError> {
        match self.kg.mode {
            KgMode::Memory => {
                let path = self.kg.fixture.as_ref().expect("checked");
                Ok(Box::new(Arc::new(load_tsv(path).map_err(config_err)?)))
            }
            KgMode::Remote => {
                let d = RemoteConfig::default();
                let cfg = RemoteConfig {
                    endpoint: self.kg.endpoint.clone().unwrap_or(d.endpoint),
                    user_agent: self.kg.user_agent.clone().unwrap_or_default(),
                    timeout_secs: self.kg.timeout_secs.unwrap_or(d.timeout_secs),
                    max_in_flight: self.kg.max_in_flight.unwrap_or(d.max_in_flight),
                    fetch_cap: self.kg.fetch_cap.unwrap_or(d.fetch_cap),
                    retry: self.kg.retry.clone().unwrap_or(d.retry),
                };
                Ok(Box::new(RemoteBackend::new(cfg).map_err(config_err)?))
            }
        }
    }

    /// Provider for one command; `script` picks the scripted-mode file.
    pub fn provider(&self, script: Option<&PathBuf>, role: &str) -> Result<Box<dyn ChatProvider>, CliError> {
        match self.llm.mode {
            LlmMode::Scripted => {
                let path = script
                    .ok_or_else(|| CliError::Config(format!("llm.scripts.{role} is required in scripted mode")))?;
                Ok(Box::new(ScriptedProvider::load(path).map_err(config_err)?))
            }
            LlmMode::Http => {
                let cfg = HttpProviderConfig {
                    base_url: self.llm.base_url.clone(),
                    api_key_env: self.llm.api_key_env.clone(),
                    timeout_secs: self.llm.timeout_secs,
                    max_in_flight: self.llm.max_in_flight,
                    requests_per_minute: self.llm.requests_per_minute,
                    retry: self.llm.retry.clone(),
                };
                Ok(Box::new(HttpProvider::new(&cfg).map_err(config_err)?))
            }
        }
    }

    fn require_deterministic_ready(&self) -> Result<(), CliError> {
        if self.llm.mode != LlmMode::Scripted {
            return Err(CliError::Config(
                "--deterministic requires llm.mode = \"scripted\"".into(),
            ));
        }
        Ok(())
    }
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    }
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("serializable"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateSummary {
    pub seeds: usize,
    pub candidates: usize,
    pub abandoned: BTreeMap<String, usize>,
    pub raw: PathBuf,
    pub abandoned_file: PathBuf,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seeds: {}", self.seeds)?;
        writeln!(f, "candidates: {} -> {}", self.candidates, self.raw.display())?;
        for (reason, n) in &self.abandoned {
            writeln!(f, "abandoned ({reason}): {n}")?;
        }
        Ok(())
    }
}

fn reason_name<T: Serialize>(r: &T) -> String {
    serde_json::to_value(r)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Debug, Clone, Default)]
pub struct GenerateArgs {
    pub seeds: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub deterministic: bool,
}

/// Runs generation for every seed and writes `raw.jsonl` and
/// `abandoned.jsonl` into the output directory.
pub fn cmd_generate(cfg: &Config, args: &GenerateArgs) -> Result<GenerateSummary, CliError> {
    if args.deterministic {
        cfg.require_deterministic_ready()?;
    }
    let seeds_path = args
        .seeds
        .clone()
        .or_else(|| cfg.paths.seeds.clone())
        .ok_or_else(|| CliError::Config("no seeds file (use --seeds or paths.seeds)".into()))?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.paths.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory (use --out or paths.output_dir)".into()))?;
    let seeds_text =
        fs::read_to_string(&seeds_path).map_err(|e| CliError::Config(format!("{}: {e}", seeds_path.display())))?;
    let seeds = pipeline::parse_seeds(&seeds_text).map_err(config_err)?;

    let backend = cfg.backend()?;
    let llm = cfg.provider(cfg.llm.scripts.generate.as_ref(), "generate")?;
    let pcfg = cfg.pipeline_config(args.deterministic);
    let results = pipeline::run_batch(backend.as_ref(), llm.as_ref(), &seeds, &pcfg, args.workers);

    let mut records = Vec::new();
    let mut abandoned = Vec::new();
    for r in results {
        match r {
            Ok(c) => records.push(c.to_record()),
            Err(a) => abandoned.push(a),
        }
    }
    let raw = out_dir.join("raw.jsonl");
    let abandoned_file = out_dir.join("abandoned.jsonl");
    write_lines(&raw, &records)?;
    write_lines(&abandoned_file, &abandoned)?;

    let mut counts = BTreeMap::new();
    for a in &abandoned {
        *counts.entry(reason_name(&a.reason)).or_insert(0) += 1;
    }
    let summary = GenerateSummary {
        seeds: seeds.len(),
        candidates: records.len(),
        abandoned: counts,
        raw,
        abandoned_file,
    };
    if let Some(a) = abandoned.iter().find(|a| a.reason == AbandonReason::Infrastructure) {
        log::error!("{summary}");
        return Err(CliError::Infrastructure(format!("seed {}: {}", a.seed.qid, a.detail)));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub candidates: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
    pub retention_percent: f64,
    pub out: PathBuf,
    pub rejected_file: PathBuf,
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "candidates: {}", self.candidates)?;
        writeln!(f, "accepted: {} -> {}", self.accepted, self.out.display())?;
        for (reason, n) in &self.rejected {
            writeln!(f, "rejected ({reason}): {n}")?;
        }
        writeln!(f, "retention: {:.1}%", self.retention_percent)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyArgs {
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub rejected: Option<PathBuf>,
    pub workers: usize,
    pub deterministic: bool,
}

fn default_beside(input: &Path, name: &str) -> PathBuf {
    input.parent().unwrap_or(Path::new(".")).join(name)
}

/// Validates every candidate. Accepted records carry the query that passed;
/// rejected ones go to a sidecar with their attempt trace.
pub fn cmd_verify(cfg: &Config, args: &VerifyArgs) -> Result<VerifySummary, CliError> {
    if args.deterministic {
        cfg.require_deterministic_ready()?;
    }
    let candidates = dataset::read_candidates(&args.input).map_err(config_err)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_beside(&args.input, "verified.jsonl"));
    let rejected_file = args
        .rejected
        .clone()
        .unwrap_or_else(|| default_beside(&args.input, "rejected.jsonl"));

    let backend = cfg.backend()?;
    let llm = cfg.provider(cfg.llm.scripts.verify.as_ref(), "verify")?;
    let opts = cfg.verify_options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<ValidationOutcome> = pool.install(|| {
        candidates
            .par_iter()
            .map(|c| verifier::validate(c, backend.as_ref(), llm.as_ref(), &opts))
            .collect()
    });

    let mut accepted: Vec<InstanceRecord> = Vec::new();
    let mut rejected = Vec::new();
    let mut counts = BTreeMap::new();
    let mut infra = None;
    for (c, o) in candidates.iter().zip(outcomes) {
        match o {
            ValidationOutcome::Accepted {
                final_sparql, attempts, ..
            } => {
                let mut r = c.clone();
                r.sparql = final_sparql;
                r.meta.validation_attempts = Some(attempts);
                accepted.push(r);
            }
            ValidationOutcome::Rejected {
                reason,
                attempts,
                trace,
            } => {
                if reason == FailureClass::Infrastructure && infra.is_none() {
                    let detail = trace.last().and_then(|t| t.detail.clone()).unwrap_or_default();
                    infra = Some(format!("instance {}: {detail}", c.id));
                }
                *counts.entry(reason_name(&reason)).or_insert(0) += 1;
                rejected.push(json!({
                    "id": c.id,
                    "reason": reason,
                    "attempts": attempts,
                    "trace": trace,
                    "instance": c,
                }));
            }
        }
    }
    write_lines(&out, &accepted)?;
    write_lines(&rejected_file, &rejected)?;

    let summary = VerifySummary {
        candidates: candidates.len(),
        accepted: accepted.len(),
        rejected: counts,
        retention_percent: if candidates.is_empty() {
            0.0
        } else {
            (accepted.len() as f64 * 1000.0 / candidates.len() as f64).round() / 10.0
        },
        out,
        rejected_file,
    };
    if let Some(detail) = infra {
        log::error!("{summary}");
        return Err(CliError::Infrastructure(detail));
    }
    if accepted.is_empty() {
        log::error!("{summary}");
        return Err(CliError::NoneAccepted);
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl fmt::Display for SplitSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "train: {}  dev: {}  test: {}", self.train, self.dev, self.test)
    }
}

/// Writes `train.jsonl`, `dev.jsonl` and `test.jsonl` into `out_dir`.
pub fn cmd_split(input: &Path, spec: &SplitSpec, out_dir: &Path) -> Result<SplitSummary, CliError> {
    let records = dataset::read_jsonl(input).map_err(config_err)?;
    let parts = dataset::split(&records, spec).map_err(config_err)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Config(format!("{}: {e}", out_dir.display())))?;
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        dataset::write_jsonl(part, &out_dir.join(format!("{name}.jsonl"))).map_err(config_err)?;
    }
    Ok(SplitSummary {
        train: parts.train.len(),
        dev: parts.dev.len(),
        test: parts.test.len(),
    })
}

/// Statistics over any JSONL/JSON file with question and answer fields.
pub fn cmd_stats(input: &Path, report: Option<&Path>) -> Result<dataset::DatasetStats, CliError> {
    let pairs = dataset::read_loose_pairs(input).map_err(config_err)?;
    let stats = dataset::stats_from_pairs(pairs.iter().map(|(q, n)| (q.as_str(), *n)));
    if let Some(path) = report {
        let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
        fs::write(path, text + "\n").map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub gold: PathBuf,
    pub pred: PathBuf,
    pub mode: MatchMode,
    pub report: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

/// EM always; LASM additionally when `mode` is `lasm` (needs a config for
/// the judge provider).
pub fn cmd_eval(cfg: Option<&Config>, args: &EvalArgs) -> Result<EvalReport, CliError> {
    let gold = dataset::read_jsonl(&args.gold).map_err(config_err)?;
    let preds = evaluation::read_predictions(&args.pred).map_err(config_err)?;
    let eval_err = |e: evaluation::EvalError| match e {
        evaluation::EvalError::Judge(_) | evaluation::EvalError::Verdict(_) => CliError::Infrastructure(e.to_string()),
        other => config_err(other),
    };
    let report = match args.mode {
        MatchMode::Em => evaluation::evaluate(&gold, &preds, None).map_err(eval_err)?,
        MatchMode::Lasm => {
            let cfg = cfg.ok_or_else(|| CliError::Config("--mode lasm needs --config for the judge".into()))?;
            let cache = match &args.cache {
                Some(p) => JudgeCache::open(p).map_err(config_err)?,
                None => JudgeCache::in_memory(),
            };
            let llm = cfg.provider(cfg.llm.scripts.judge.as_ref(), "judge")?;
            let judge = Judge::new(llm.as_ref(), cfg.llm.judge_model.clone(), &cache);
            evaluation::evaluate(&gold, &preds, Some(&judge)).map_err(eval_err)?
        }
    };
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(report)
}

/// Command-line interface of the `kgqagen` binary.
#[derive(Debug, Parser)]
#[command(
    name = "kgqagen",
    version,
    about = "Generate, verify, split and score KG-grounded QA datasets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonRun {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Zero timestamps and require scripted LLM responses.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow subgraphs around seeds and write candidate instances.
    Generate {
        #[command(flatten)]
        run: CommonRun,
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Output directory (defaults to paths.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute and repair candidate queries; keep only verified instances.
    Verify {
        #[command(flatten)]
        run: CommonRun,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        rejected: Option<PathBuf>,
    },
    /// Deterministic train/dev/test split.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        dev_fraction: f64,
        #[arg(long, default_value_t = 0.1)]
        test_fraction: f64,
    },
    /// Question-length and answer-count statistics.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against a gold file.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "em")]
        mode: MatchMode,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Append-only judge verdict cache (JSONL).
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn emit(result: Result<impl fmt::Display, CliError>) -> i32 {
    match result {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Generate { run, seeds, out } => emit(Config::load(&run.config).and_then(|cfg| {
            cmd_generate(
                &cfg,
                &GenerateArgs {
                    seeds,
                    out,
                    workers: run.workers,
                    deterministic: run.deterministic,
                },
            )
        })),
        Command::Verify {
            run,
            input,
            out,
            rejected,
        } => emit(Config::load(&run.config).and_then(|cfg| {
            cmd_verify(
                &cfg,
                &VerifyArgs {
                    input,
                    out,
                    rejected,
                    workers: run.workers,
                    deterministic: run.deterministic,
                },
            )
        })),
        Command::Split {
            input,
            out,
            seed,
            dev_fraction,
            test_fraction,
        } => emit(cmd_split(
            &input,
            &SplitSpec {
                dev_fraction,
                test_fraction,
                seed,
            },
            &out,
        )),
        Command::Stats { input, out } => emit(cmd_stats(&input, out.as_deref())),
        Command::Eval {
            gold,
            pred,
            mode,
            report,
            cache,
            config,
        } => {
            let cfg = match config.as_deref().map(Config::load).transpose() {
                Ok(c) => c,
                Err(e) => return emit(Err::<String, _>(e)),
            };
            emit(cmd_eval(
                cfg.as_ref(),
                &EvalArgs {
                    gold,
                    pred,
                    mode,
                    report,
                    cache,
                },
            ))
        }
    }
}
