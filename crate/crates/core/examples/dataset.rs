//! Split a dataset deterministically and summarise it.
//!
//!     cargo run --example dataset

use kgqagen::dataset::{split, split_sizes, stats_from_pairs, SplitSpec};

fn main() -> anyhow::Result<()> {
    let spec = SplitSpec::default();
    println!("10,787 records split into {:?}", split_sizes(10_787, &spec)?);

    let ids: Vec<u32> = (0..20).collect();
    let s = split(&ids, &SplitSpec { seed: 3, ..spec })?;
    println!("train {:?}\ndev   {:?}\ntest  {:?}\n", s.train, s.dev, s.test);

    let pairs = [
        ("Which city is the capital of Karakalpakstan?", 1),
        ("Who among the nominees for the Nobel Peace Prize was also the founder of International Volapük Academy?", 1),
        ("Which writing systems are used for the language spoken in the autonomous republic that borders the region?", 3),
    ];
    print!("{}", stats_from_pairs(pairs.iter().map(|(q, n)| (*q, *n))));
    Ok(())
}
