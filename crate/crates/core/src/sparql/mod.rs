//! A restricted SPARQL dialect: basic graph patterns over `wd:`/`wdt:` terms,
//! `SELECT [DISTINCT]`, an optional `SERVICE wikibase:label` clause and an
//! optional `LIMIT`. Queries outside that shape are rejected by [`parse`]; the
//! remote backend still forwards them verbatim to the endpoint.

mod backend;
mod eval;
mod parser;
mod remote;

use std::collections::BTreeMap;
use std::fmt;

use crate::kg::{EntityId, PropertyId};

pub use backend::{BackendError, KgBackend};
pub use eval::evaluate;
pub use parser::{parse, ParseError};
pub use remote::{decode_results, one_hop_query, RemoteBackend, RemoteConfig, RemoteStats};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Entity(EntityId),
    Predicate(PropertyId),
    Literal(String),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Entity(q) => write!(f, "wd:{q}"),
            PatternTerm::Predicate(p) => write!(f, "wdt:{p}"),
            PatternTerm::Literal(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(PatternTerm::var)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// Parsed query. `Display` produces the canonical text form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub distinct: bool,
    pub projected: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub label_service: bool,
    pub limit: Option<u64>,
}

impl Query {
    /// Whether `name` occurs in some triple pattern.
    pub fn uses_var(&self, name: &str) -> bool {
        self.patterns.iter().any(|p| p.vars().any(|v| v == name))
    }

    /// For a projected `?xLabel` served by the label service, returns `x`.
    pub fn label_stem<'a>(&self, name: &'a str) -> Option<&'a str> {
        if !self.label_service || self.uses_var(name) {
            return None;
        }
        name.strip_suffix("Label")
            .filter(|stem| !stem.is_empty() && self.uses_var(stem))
    }

    /// Output columns: projected variables with `?xLabel` folded into `?x`
    /// whenever `?x` is projected too.
    pub fn result_variables(&self) -> Vec<String> {
        self.projected
            .iter()
            .filter(|v| match self.label_stem(v) {
                Some(stem) => !self.projected.iter().any(|p| p == stem),
                None => true,
            })
            .cloned()
            .collect()
    }
}

pub const LABEL_SERVICE: &str = "SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\" . }";

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for v in &self.projected {
            write!(f, "?{v} ")?;
        }
        f.write_str("WHERE { ")?;
        for p in &self.patterns {
            write!(f, "{p} . ")?;
        }
        if self.label_service {
            write!(f, "{LABEL_SERVICE} ")?;
        }
        f.write_str("}")?;
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}

/// One bound value in a result row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundValue {
    pub qid: Option<EntityId>,
    pub pid: Option<PropertyId>,
    pub literal: Option<String>,
    pub label: Option<String>,
}

impl BoundValue {
    pub fn entity(qid: EntityId, label: Option<String>) -> Self {
        BoundValue {
            qid: Some(qid),
            label,
            ..Default::default()
        }
    }

    pub fn literal(value: impl Into<String>) -> Self {
        BoundValue {
            literal: Some(value.into()),
            ..Default::default()
        }
    }
}

pub type Row = BTreeMap<String, BoundValue>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultSet {
    pub variables: Vec<String>,
    pub rows: Vec<Row>,
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorts rows by their values in column order.
    pub fn sort_rows(&mut self) {
        let vars = self.variables.clone();
        self.rows
            .sort_by_cached_key(|row| vars.iter().map(|v| row.get(v).cloned()).collect::<Vec<_>>());
    }
}
