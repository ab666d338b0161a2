//! Score predictions with exact match and with the LLM-judged matcher.
//! Judge verdicts are cached, so a second pass makes no calls.
//!
//!     cargo run --example evaluate

use kgqagen::evaluation::{evaluate, read_predictions, Judge, JudgeCache, MatchMode};
use kgqagen::kg::load_tsv;
use kgqagen::llm::ScriptedProvider;
use kgqagen::pipeline::{generate_instance, parse_seeds, seed_rng, PipelineConfig};
use std::path::Path;

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked");

    // Gold: the two instances the fixture pipeline produces.
    let store = load_tsv(dir.join("kg.tsv"))?;
    let generator = ScriptedProvider::load(&dir.join("generate.jsonl"))?;
    let cfg = PipelineConfig {
        rng_seed: 7,
        zero_timestamps: true,
        ..PipelineConfig::default()
    };
    let gold: Vec<_> = parse_seeds(&std::fs::read_to_string(dir.join("seeds.tsv"))?)?
        .iter()
        .enumerate()
        .filter_map(|(i, s)| generate_instance(&store, &generator, s, &cfg, &mut seed_rng(7, i)).ok())
        .map(|c| c.to_record())
        .collect();

    let preds = read_predictions(&dir.join("predictions.jsonl"))?;
    let cache_path = std::env::temp_dir().join(format!("kgqagen-judge-{}.jsonl", std::process::id()));
    for pass in 1..=2 {
        let cache = JudgeCache::open(&cache_path)?;
        let judge_llm = ScriptedProvider::load(&dir.join("judge.jsonl"))?;
        let judge = Judge::new(&judge_llm, "gpt-4o-mini", &cache);
        let report = evaluate(&gold, &preds, Some(&judge))?;
        println!("pass {pass}:\n{report}");
        assert_eq!(report.lasm.as_ref().map(|r| r.mode), Some(MatchMode::Lasm));
    }
    std::fs::remove_file(cache_path)?;
    Ok(())
}
