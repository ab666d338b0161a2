//! SPARQL 1.1 Protocol client for a remote endpoint (Wikidata Query Service
//! by default).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{BackendError, BoundValue, KgBackend, ResultSet, Row};
use crate::http::{is_retryable_status, HttpRequest, HttpTransport, InFlightLimiter, RetryPolicy, UreqTransport};
use crate::kg::{
    sample_triples, Direction, EntityId, EntityRef, LiteralKind, PredicateRef, PropertyId, Term, Triple, TripleStore,
};

const ENTITY_PREFIX: &str = "http://www.wikidata.org/entity/";
const DIRECT_PREFIX: &str = "http://www.wikidata.org/prop/direct/";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub user_agent: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Upper bound on neighbour triples fetched per one-hop request.
    pub fetch_cap: usize,
    pub retry: RetryPolicy,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "https://query.wikidata.org/sparql".into(),
            user_agent: String::new(),
            timeout_secs: 60,
            max_in_flight: 2,
            fetch_cap: 100,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RemoteStats {
    pub requests: u64,
    pub retries: u64,
}

pub struct RemoteBackend {
    config: RemoteConfig,
    transport: Arc<dyn HttpTransport>,
    limiter: InFlightLimiter,
    requests: AtomicU64,
    retries: AtomicU64,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        Self::with_transport(config, Arc::new(UreqTransport::default()))
    }

    pub fn with_transport(config: RemoteConfig, transport: Arc<dyn HttpTransport>) -> Result<Self, BackendError> {
        if config.user_agent.trim().is_empty() {
            return Err(BackendError::Config(
                "a descriptive User-Agent is required for remote SPARQL endpoints".into(),
            ));
        }
        Ok(RemoteBackend {
            limiter: InFlightLimiter::new(config.max_in_flight),
            config,
            transport,
            requests: AtomicU64::new(0),
            retries: AtomicU64::new(0),
        })
    }

    pub fn stats(&self) -> RemoteStats {
        RemoteStats {
            requests: self.requests.load(Ordering::Relaxed),
            retries: self.retries.load(Ordering::Relaxed),
        }
    }

    fn post_query(&self, text: &str) -> Result<Json, BackendError> {
        let body = url::form_urlencoded::Serializer::new(String::new())
            .append_pair("query", text)
            .finish();
        let request = HttpRequest {
            url: self.config.endpoint.clone(),
            headers: vec![
                ("Accept".into(), "application/sparql-results+json".into()),
                ("User-Agent".into(), self.config.user_agent.clone()),
                ("Content-Type".into(), "application/x-www-form-urlencoded".into()),
            ],
            body,
            timeout: Duration::from_secs(self.config.timeout_secs),
        };

        let policy = &self.config.retry;
        let max_attempts = policy.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.requests.fetch_add(1, Ordering::Relaxed);
            let outcome = {
                let _permit = self.limiter.acquire();
                self.transport.post(&request)
            };
            let (err, retry_after) = match outcome {
                Ok(resp) if resp.status == 200 => {
                    return serde_json::from_str(&resp.body).map_err(|e| BackendError::Malformed(e.to_string()));
                }
                Ok(resp) if looks_like_query_timeout(&resp.body) => {
                    return Err(BackendError::QueryTimeout);
                }
                Ok(resp) if is_retryable_status(resp.status) => {
                    let ra = resp.retry_after();
                    (
                        BackendError::Status {
                            status: resp.status,
                            body: truncate(&resp.body),
                        },
                        ra,
                    )
                }
                Ok(resp) => {
                    return Err(BackendError::Status {
                        status: resp.status,
                        body: truncate(&resp.body),
                    })
                }
                Err(e) => (BackendError::Transport(e.to_string()), None),
            };
            if attempt >= max_attempts {
                return Err(err);
            }
            self.retries.fetch_add(1, Ordering::Relaxed);
            log::warn!("sparql request failed ({err}); retry {attempt}/{}", max_attempts - 1);
            std::thread::sleep(policy.delay(attempt, retry_after));
        }
    }

    /// Sends the query text unmodified and decodes the results document.
    pub fn execute_remote(&self, text: &str) -> Result<ResultSet, BackendError> {
        decode_results(&self.post_query(text)?)
    }

    pub fn fetch_neighbors(&self, qid: EntityId, direction: Direction) -> Result<Vec<Triple>, BackendError> {
        let doc = self.post_query(&one_hop_query(qid, direction, self.config.fetch_cap))?;
        let bindings = doc
            .pointer("/results/bindings")
            .and_then(Json::as_array)
            .ok_or_else(|| BackendError::Malformed("missing results.bindings".into()))?;

        let mut triples = Vec::new();
        for b in bindings {
            let Some(s) = cell(b, "s").and_then(|c| entity_of(&c)) else {
                continue;
            };
            let Some(p) = cell(b, "prop").and_then(|c| property_of(&c)) else {
                continue;
            };
            let label = |name: &str| cell(b, name).map(|c| c.value).unwrap_or_default();
            let object = match cell(b, "o") {
                Some(c) if c.kind == "uri" => match entity_of(&c) {
                    Some(q) => Term::Entity(EntityRef::new(q, label("oLabel"))),
                    None => continue,
                },
                Some(c) if c.kind == "literal" || c.kind == "typed-literal" => Term::Literal {
                    kind: literal_kind(c.datatype.as_deref()),
                    value: c.value,
                },
                _ => continue,
            };
            triples.push(Triple::new(
                EntityRef::new(s, label("sLabel")),
                PredicateRef::new(p, label("propLabel")),
                object,
            ));
        }
        let store = TripleStore::from_triples(triples);
        Ok(store.neighbors(qid, direction))
    }
}

impl KgBackend for RemoteBackend {
    fn one_hop(
        &self,
        qid: EntityId,
        k: usize,
        direction: Direction,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Triple>, BackendError> {
        let all = self.fetch_neighbors(qid, direction)?;
        Ok(sample_triples(all, k, rng))
    }

    fn execute(&self, query_text: &str) -> Result<ResultSet, BackendError> {
        self.execute_remote(query_text)
    }
}

fn looks_like_query_timeout(body: &str) -> bool {
    body.contains("java.util.concurrent.TimeoutException") || body.contains("QueryTimeoutException")
}

fn truncate(s: &str) -> String {
    s.chars().take(500).collect()
}

/// Template query listing one-hop neighbour triples with labels.
pub fn one_hop_query(qid: EntityId, direction: Direction, cap: usize) -> String {
    let out = format!("{{ BIND(wd:{qid} AS ?s) ?s ?p ?o . }}");
    let inc = format!("{{ BIND(wd:{qid} AS ?o) ?s ?p ?o . }}");
    let branches = match direction {
        Direction::Out => out,
        Direction::In => inc,
        Direction::Both => format!("{out} UNION {inc}"),
    };
    format!(
        "SELECT ?s ?sLabel ?prop ?propLabel ?o ?oLabel WHERE {{\n  {branches}\n  ?prop wikibase:directClaim ?p .\n  SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"en\" . }}\n}}\nLIMIT {cap}"
    )
}

struct Cell {
    kind: String,
    value: String,
    datatype: Option<String>,
}

fn cell(binding: &Json, name: &str) -> Option<Cell> {
    let c = binding.get(name)?;
    Some(Cell {
        kind: c.get("type")?.as_str()?.to_string(),
        value: c.get("value")?.as_str()?.to_string(),
        datatype: c.get("datatype").and_then(Json::as_str).map(str::to_string),
    })
}

fn entity_of(c: &Cell) -> Option<EntityId> {
    if c.kind != "uri" {
        return None;
    }
    c.value.strip_prefix(ENTITY_PREFIX)?.parse().ok()
}

fn property_of(c: &Cell) -> Option<PropertyId> {
    if c.kind != "uri" {
        return None;
    }
    c.value
        .strip_prefix(ENTITY_PREFIX)
        .or_else(|| c.value.strip_prefix(DIRECT_PREFIX))?
        .parse()
        .ok()
}

fn literal_kind(datatype: Option<&str>) -> LiteralKind {
    match datatype {
        Some(dt) if dt.ends_with("#dateTime") || dt.ends_with("#date") => LiteralKind::Date,
        Some(dt)
            if ["#decimal", "#integer", "#double", "#float", "#int", "#long"]
                .iter()
                .any(|s| dt.ends_with(s)) =>
        {
            LiteralKind::Number
        }
        _ => LiteralKind::Plain,
    }
}

/// Decodes an `application/sparql-results+json` document.
///
/// Entity URIs become ids, `?xLabel` columns are folded into `?x` when both
/// are present, and unbound cells are left out of their row.
pub fn decode_results(doc: &Json) -> Result<ResultSet, BackendError> {
    let vars: Vec<String> = doc
        .pointer("/head/vars")
        .and_then(Json::as_array)
        .ok_or_else(|| BackendError::Malformed("missing head.vars".into()))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| BackendError::Malformed("non-string variable name".into()))
        })
        .collect::<Result<_, _>>()?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Json::as_array)
        .ok_or_else(|| BackendError::Malformed("missing results.bindings".into()))?;

    let folded = |v: &str| {
        v.strip_suffix("Label")
            .is_some_and(|stem| !stem.is_empty() && vars.iter().any(|x| x == stem))
    };
    let variables: Vec<String> = vars.iter().filter(|v| !folded(v)).cloned().collect();

    let mut rows = Vec::with_capacity(bindings.len());
    for b in bindings {
        if !b.is_object() {
            return Err(BackendError::Malformed("binding is not an object".into()));
        }
        let mut row = Row::new();
        for name in &variables {
            let Some(c) = cell(b, name) else { continue };
            let mut value = match c.kind.as_str() {
                "uri" => {
                    if let Some(q) = entity_of(&c) {
                        BoundValue::entity(q, None)
                    } else if let Some(p) = property_of(&c) {
                        BoundValue {
                            pid: Some(p),
                            ..Default::default()
                        }
                    } else {
                        BoundValue::literal(c.value)
                    }
                }
                "literal" | "typed-literal" | "bnode" => BoundValue::literal(c.value),
                other => return Err(BackendError::Malformed(format!("unknown binding type {other:?}"))),
            };
            if let Some(label) = cell(b, &format!("{name}Label")) {
                value.label = Some(label.value);
            }
            row.insert(name.clone(), value);
        }
        rows.push(row);
    }
    let mut rs = ResultSet { variables, rows };
    rs.sort_rows();
    Ok(rs)
}
