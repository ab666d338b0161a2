//! generate -> verify -> eval through the same entry points as the CLI.
//!
//!     cargo run --example end_to_end

use std::path::Path;

use kgqagen::cli::{cmd_eval, cmd_generate, cmd_verify, Config, EvalArgs, GenerateArgs, VerifyArgs};
use kgqagen::evaluation::MatchMode;

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked");
    let cfg = Config::load(&fixtures.join("config.json"))?;
    let out = tempfile_dir()?;

    let generated = cmd_generate(
        &cfg,
        &GenerateArgs {
            seeds: None,
            out: Some(out.clone()),
            workers: 2,
            deterministic: true,
        },
    )?;
    print!("{generated}");

    let verified = cmd_verify(
        &cfg,
        &VerifyArgs {
            input: out.join("raw.jsonl"),
            out: None,
            rejected: None,
            workers: 2,
            deterministic: true,
        },
    )?;
    print!("{verified}");

    let report = cmd_eval(
        Some(&cfg),
        &EvalArgs {
            gold: verified.out.clone(),
            pred: fixtures.join("predictions.jsonl"),
            mode: MatchMode::Lasm,
            report: Some(out.join("report.json")),
            cache: Some(out.join("judge-cache.jsonl")),
        },
    )?;
    print!("{report}");
    println!("artifacts in {}", out.display());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("kgqagen-e2e-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
