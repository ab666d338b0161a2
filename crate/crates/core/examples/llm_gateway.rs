//! The OpenAI-compatible provider and the scripted replay provider.
//!
//! The HTTP provider reads its key from the environment variable named in
//! its config; here a local transport answers instead of the real API.
//!
//!     cargo run --example llm_gateway

use std::sync::Arc;

use kgqagen::http::{HttpRequest, HttpResponse, HttpTransport, TransportError};
use kgqagen::llm::{ChatProvider, ChatRequest, HttpProvider, HttpProviderConfig, ScriptedProvider};
use serde_json::json;

struct Echo;

impl HttpTransport for Echo {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let sent: serde_json::Value = serde_json::from_str(&request.body).unwrap();
        let reply = format!(
            "model {} saw {} message(s)",
            sent["model"],
            sent["messages"].as_array().unwrap().len()
        );
        Ok(HttpResponse {
            status: 200,
            headers: vec![],
            body: json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string(),
        })
    }
}

fn main() -> anyhow::Result<()> {
    let request = ChatRequest::user("gpt-4.1", "Say hello.");

    let config = HttpProviderConfig {
        api_key_env: "KGQAGEN_EXAMPLE_KEY".into(),
        ..HttpProviderConfig::default()
    };
    match HttpProvider::with_transport(&config, Arc::new(Echo)) {
        Ok(provider) => println!("http: {}", provider.complete(&request)?),
        Err(e) => println!("http provider unavailable ({e}); export KGQAGEN_EXAMPLE_KEY=dummy to try it"),
    }

    let scripted = ScriptedProvider::from_jsonl(
        r#"{"match": {"contains": "hello"}, "response": "hello back"}
{"response": "fallback"}"#,
    )?;
    println!("scripted: {}", scripted.complete(&request)?);
    println!("scripted: {}", scripted.complete(&ChatRequest::user("m", "anything"))?);
    println!("scripted: {:?}", scripted.complete(&request).unwrap_err());
    Ok(())
}
