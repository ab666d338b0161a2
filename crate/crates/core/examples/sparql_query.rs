//! Parse and evaluate a basic-graph-pattern query against the in-memory store.
//!
//!     cargo run --example sparql_query

use kgqagen::kg::load_tsv;
use kgqagen::sparql::{evaluate, parse};
use kgqagen::verifier::resultset_to_answers;

const QUERY: &str = r#"
SELECT ?ans WHERE {
  ?ans wdt:P1411 wd:Q35637 .
  wd:Q3358168 wdt:P112 ?ans .
  SERVICE wikibase:label { bd:serviceParam wikibase:language "en". }
}"#;

fn main() -> anyhow::Result<()> {
    let store = load_tsv(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worked/kg.tsv"))?;
    let query = parse(QUERY)?;
    println!("canonical form:\n  {query}\n");

    let results = evaluate(&query, &store);
    for row in &results.rows {
        for (var, value) in row {
            println!("?{var} = {value:?}");
        }
    }
    println!("\nanswer set: {:?}", resultset_to_answers(&results));

    // Variables may also stand in predicate position.
    let q = parse("SELECT ?p ?o WHERE { wd:Q12712 ?p ?o . }")?;
    println!("\nfacts about Q12712: {} rows", evaluate(&q, &store).rows.len());
    Ok(())
}
