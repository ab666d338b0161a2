//! Talk to a SPARQL endpoint through the remote backend. A canned transport
//! stands in for the network so this runs offline; swap in
//! `RemoteBackend::new` to hit a real endpoint.
//!
//!     cargo run --example remote_sparql

use std::sync::{Arc, Mutex};

use kgqagen::http::{HttpRequest, HttpResponse, HttpTransport, RetryPolicy, TransportError};
use kgqagen::sparql::{KgBackend, RemoteBackend, RemoteConfig};
use serde_json::json;

/// Fails once with 429, then answers.
struct Canned {
    calls: Mutex<u32>,
}

impl HttpTransport for Canned {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let mut calls = self.calls.lock().unwrap();
        *calls += 1;
        println!("POST {} ({} bytes)", request.url, request.body.len());
        if *calls == 1 {
            return Ok(HttpResponse {
                status: 429,
                headers: vec![("Retry-After".into(), "0".into())],
                body: "slow down".into(),
            });
        }
        let body = json!({
            "head": {"vars": ["ans", "ansLabel"]},
            "results": {"bindings": [{
                "ans": {"type": "uri", "value": "http://www.wikidata.org/entity/Q12712"},
                "ansLabel": {"type": "literal", "xml:lang": "en", "value": "Johann Martin Schleyer"}
            }]}
        });
        Ok(HttpResponse {
            status: 200,
            headers: vec![],
            body: body.to_string(),
        })
    }
}

fn main() -> anyhow::Result<()> {
    let config = RemoteConfig {
        user_agent: "kgqagen-example/0.1 (maintainer@example.org)".into(),
        retry: RetryPolicy::no_delay(3),
        ..RemoteConfig::default()
    };
    let backend = RemoteBackend::with_transport(config, Arc::new(Canned { calls: Mutex::new(0) }))?;
    let rs = backend.execute(
        "SELECT ?ans WHERE { wd:Q3358168 wdt:P112 ?ans . SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". } }",
    )?;
    println!("rows: {:?}", rs.rows);
    println!("stats: {:?}", backend.stats());
    Ok(())
}
