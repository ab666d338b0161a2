//! Execute a candidate's query and let the reviser repair it.
//!
//!     cargo run --example verify

use kgqagen::dataset::{InstanceRecord, RecordMeta, SeedRef, EPOCH};
use kgqagen::kg::load_tsv;
use kgqagen::llm::ScriptedProvider;
use kgqagen::verifier::{validate, ValidationOutcome, VerifyOptions};

fn main() -> anyhow::Result<()> {
    let store = load_tsv(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worked/kg.tsv"))?;
    let candidate = InstanceRecord {
        id: "demo".into(),
        seed: SeedRef {
            label: "Johann Martin Schleyer".into(),
            qid: "Q12712".parse()?,
        },
        question:
            "Who among the nominees for the Nobel Peace Prize was also the founder of International Volapük Academy?"
                .into(),
        answers: vec!["Johann Martin Schleyer (Q12712)".into()],
        proof: vec![
            [
                "Johann Martin Schleyer (Q12712)".into(),
                "nominated for (P1411)".into(),
                "Nobel Peace Prize (Q35637)".into(),
            ],
            [
                "International Volapük Academy (Q3358168)".into(),
                "founded by (P112)".into(),
                "Johann Martin Schleyer (Q12712)".into(),
            ],
        ],
        // Wrong direction on the second pattern: returns nothing.
        sparql: "SELECT ?ans WHERE { ?ans wdt:P1411 wd:Q35637 . ?ans wdt:P112 wd:Q3358168 . }".into(),
        meta: RecordMeta {
            iterations: 0,
            validation_attempts: None,
            model: "gpt-4.1".into(),
            created_at: EPOCH.into(),
        },
    };
    let reviser = ScriptedProvider::queue([
        "this is not json",
        r#"{"correct_sparql": "SELECT ?ans WHERE { ?ans wdt:P1411 wd:Q35637 . wd:Q3358168 wdt:P112 ?ans . }"}"#,
    ]);

    let outcome = validate(&candidate, &store, &reviser, &VerifyOptions::default());
    for a in outcome.trace() {
        println!("attempt {}: {:?} -> {:?}", a.attempt, a.sparql, a.failure);
    }
    match outcome {
        ValidationOutcome::Accepted {
            final_sparql, attempts, ..
        } => {
            println!("accepted after {attempts} revision(s): {final_sparql}")
        }
        ValidationOutcome::Rejected { reason, attempts, .. } => println!("rejected ({reason:?}) after {attempts}"),
    }
    Ok(())
}
