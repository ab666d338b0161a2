//! Render the generator and validator prompts.
//!
//!     cargo run --example prompts

use kgqagen::kg::load_tsv;
use kgqagen::llm::{render_generator_prompt, render_validator_prompt};

fn main() -> anyhow::Result<()> {
    let store = load_tsv(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worked/kg.tsv"))?;
    let subgraph: Vec<_> = store.triples().iter().take(3).cloned().collect();

    println!("==== generator ====\n{}", render_generator_prompt(&subgraph)?);
    println!(
        "==== validator ====\n{}",
        render_validator_prompt(
            "Who founded the International Volapük Academy?",
            "SELECT ?ans WHERE { wd:Q3358168 wdt:P112 ?ans . }",
        )?
    );
    Ok(())
}
