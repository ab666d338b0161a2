//! Labeled Wikidata-style triples and the in-memory store that holds them.
//!
//! Entities are `Q…` items and predicates are `P…` properties. Objects may
//! also be literals (dates, quantities, strings); those never take part in
//! neighbourhood expansion.

mod store;
mod tsv;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use store::{sample_triples, Direction, TripleStore};
pub use tsv::{load_tsv, parse_tsv, to_tsv, write_tsv, TsvError};

/// Error produced when an identifier does not match `Q[0-9]+` / `P[0-9]+`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid {kind} identifier {value:?}")]
pub struct IdError {
    pub kind: &'static str,
    pub value: String,
}

fn parse_numeric_id(s: &str, prefix: char, kind: &'static str) -> Result<u64, IdError> {
    let err = || IdError {
        kind,
        value: s.to_string(),
    };
    let digits = s.strip_prefix(prefix).ok_or_else(err)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    digits.parse().map_err(|_| err())
}

/// A Wikidata item identifier (`Q42`). Ordered numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(u64);

impl EntityId {
    pub fn new(n: u64) -> Self {
        EntityId(n)
    }

    pub fn number(self) -> u64 {
        self.0
    }
}

impl FromStr for EntityId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_numeric_id(s, 'Q', "entity").map(EntityId)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0)
    }
}

/// A Wikidata property identifier (`P31`). Ordered numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropertyId(u64);

impl PropertyId {
    pub fn new(n: u64) -> Self {
        PropertyId(n)
    }

    pub fn number(self) -> u64 {
        self.0
    }
}

impl FromStr for PropertyId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_numeric_id(s, 'P', "property").map(PropertyId)
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(EntityId);
string_serde!(PropertyId);

/// An entity together with its human-readable label.
///
/// Entities without an English label carry their id as label; see
/// [`EntityRef::label_missing`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityRef {
    pub qid: EntityId,
    pub label: String,
}

impl EntityRef {
    pub fn new(qid: EntityId, label: impl Into<String>) -> Self {
        let label = label.into();
        let label = if label.trim().is_empty() {
            qid.to_string()
        } else {
            label.trim().to_string()
        };
        EntityRef { qid, label }
    }

    pub fn label_missing(&self) -> bool {
        self.label == self.qid.to_string()
    }

    /// `"<label> (<Q-ID>)"`
    pub fn surface(&self) -> String {
        format!("{} ({})", self.label, self.qid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateRef {
    pub pid: PropertyId,
    pub label: String,
}

impl PredicateRef {
    pub fn new(pid: PropertyId, label: impl Into<String>) -> Self {
        let label = label.into();
        let label = if label.trim().is_empty() {
            pid.to_string()
        } else {
            label.trim().to_string()
        };
        PredicateRef { pid, label }
    }

    /// `"<predicate> (<P-ID>)"`
    pub fn surface(&self) -> String {
        format!("{} ({})", self.label, self.pid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralKind {
    Plain,
    Date,
    Number,
}

impl LiteralKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LiteralKind::Plain => "plain",
            LiteralKind::Date => "date",
            LiteralKind::Number => "number",
        }
    }
}

impl FromStr for LiteralKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(LiteralKind::Plain),
            "date" => Ok(LiteralKind::Date),
            "number" => Ok(LiteralKind::Number),
            other => Err(format!("unknown literal kind {other:?}")),
        }
    }
}

/// Object position of a triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Entity(EntityRef),
    Literal { value: String, kind: LiteralKind },
}

impl Term {
    pub fn entity(&self) -> Option<&EntityRef> {
        match self {
            Term::Entity(e) => Some(e),
            Term::Literal { .. } => None,
        }
    }

    pub fn qid(&self) -> Option<EntityId> {
        self.entity().map(|e| e.qid)
    }

    pub fn surface(&self) -> String {
        match self {
            Term::Entity(e) => e.surface(),
            Term::Literal { value, .. } => value.clone(),
        }
    }
}

/// One fact `<subject, predicate, object>`.
///
/// The derived ordering sorts by subject id, then predicate id, then object,
/// which is the deterministic order used throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: EntityRef,
    pub predicate: PredicateRef,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: EntityRef, predicate: PredicateRef, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    /// Label-independent identity of the fact.
    pub fn key(&self) -> TripleKey {
        TripleKey {
            subject: self.subject.qid,
            predicate: self.predicate.pid,
            object: match &self.object {
                Term::Entity(e) => ObjectKey::Entity(e.qid),
                Term::Literal { value, kind } => ObjectKey::Literal(*kind, value.clone()),
            },
        }
    }

    pub fn touches(&self, qid: EntityId) -> bool {
        self.subject.qid == qid || self.object.qid() == Some(qid)
    }

    pub fn has_missing_label(&self) -> bool {
        self.subject.label_missing() || self.object.entity().is_some_and(EntityRef::label_missing)
    }

    /// The three-string surface form used in prompts and dataset files.
    pub fn surface(&self) -> [String; 3] {
        [self.subject.surface(), self.predicate.surface(), self.object.surface()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKey {
    Entity(EntityId),
    Literal(LiteralKind, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleKey {
    pub subject: EntityId,
    pub predicate: PropertyId,
    pub object: ObjectKey,
}

/// Splits `"Some label (Q123)"` into its label and trailing id, if present.
pub fn split_surface(raw: &str) -> (String, Option<String>) {
    let trimmed = raw.trim();
    if let Some(body) = trimmed.strip_suffix(')') {
        if let Some(open) = body.rfind('(') {
            let inner = body[open + 1..].trim();
            let mut chars = inner.chars();
            let head = chars.next();
            if matches!(head, Some('Q') | Some('P')) && inner.len() > 1 && chars.all(|c| c.is_ascii_digit()) {
                return (body[..open].trim().to_string(), Some(inner.to_string()));
            }
        }
    }
    (trimmed.to_string(), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse_and_order_numerically() {
        let a: EntityId = "Q9".parse().unwrap();
        let b: EntityId = "Q10".parse().unwrap();
        assert!(a < b);
        assert_eq!(b.to_string(), "Q10");
        assert!("Q".parse::<EntityId>().is_err());
        assert!("P31".parse::<EntityId>().is_err());
        assert!("Q12a".parse::<EntityId>().is_err());
        assert!("q12".parse::<EntityId>().is_err());
        assert_eq!("P1411".parse::<PropertyId>().unwrap().to_string(), "P1411");
    }

    #[test]
    fn blank_label_falls_back_to_id() {
        let e = EntityRef::new(EntityId::new(7), "  ");
        assert_eq!(e.label, "Q7");
        assert!(e.label_missing());
        assert_eq!(e.surface(), "Q7 (Q7)");
    }

    #[test]
    fn split_surface_forms() {
        assert_eq!(
            split_surface("Johann Martin Schleyer (Q12712)"),
            ("Johann Martin Schleyer".into(), Some("Q12712".into()))
        );
        assert_eq!(
            split_surface("nominated for (P1411)"),
            ("nominated for".into(), Some("P1411".into()))
        );
        assert_eq!(split_surface("AUD"), ("AUD".into(), None));
        assert_eq!(split_surface("Paris (France)"), ("Paris (France)".into(), None));
    }
}
