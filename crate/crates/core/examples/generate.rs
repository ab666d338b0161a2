//! Grow a subgraph around each seed and ask the (scripted) generator for a
//! question until the evidence suffices.
//!
//!     cargo run --example generate

use std::path::Path;

use kgqagen::kg::load_tsv;
use kgqagen::llm::ScriptedProvider;
use kgqagen::pipeline::{generate_instance, parse_seeds, seed_rng, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worked");
    let store = load_tsv(dir.join("kg.tsv"))?;
    let llm = ScriptedProvider::load(&dir.join("generate.jsonl"))?;
    let seeds = parse_seeds(&std::fs::read_to_string(dir.join("seeds.tsv"))?)?;
    let cfg = PipelineConfig {
        rng_seed: 7,
        zero_timestamps: true,
        ..PipelineConfig::default()
    };

    for (i, seed) in seeds.iter().enumerate() {
        let mut rng = seed_rng(cfg.rng_seed, i);
        match generate_instance(&store, &llm, seed, &cfg, &mut rng) {
            Ok(c) => {
                println!("[{}] {} after {} expansion(s)", seed.label, c.id, c.meta.iterations);
                println!("    Q: {}", c.question);
                println!("    A: {:?}", c.answers);
                println!("    SPARQL: {}", c.sparql);
            }
            Err(a) => println!("[{}] abandoned: {:?} ({})", seed.label, a.reason, a.detail),
        }
    }
    println!("generator calls: {}", llm.calls());
    Ok(())
}
