//! Load a TSV triple file and inspect one-hop neighbourhoods.
//!
//!     cargo run --example kg_store

use kgqagen::kg::{load_tsv, Direction};
use kgqagen::sparql::KgBackend;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worked/kg.tsv");
    let store = load_tsv(path)?;
    println!("{} triples loaded from {path}", store.len());

    let schleyer = "Q12712".parse()?;
    println!("\nall neighbours of {}:", store.entity_label(schleyer).unwrap_or("?"));
    for t in store.neighbors(schleyer, Direction::Both) {
        println!("  {}", t.surface().join(" | "));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sample = store.one_hop("Q484245".parse()?, 2, Direction::Out, &mut rng)?;
    println!("\nuniform sample of 2 outgoing triples from Karakalpakstan:");
    for t in sample {
        println!("  {}", t.surface().join(" | "));
    }
    Ok(())
}
