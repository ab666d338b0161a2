use std::collections::{BTreeSet, HashMap};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EntityId, EntityRef, PredicateRef, PropertyId, Term, Triple, TripleKey};

/// Which incident edges count as one-hop neighbours of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Triples where the entity is the subject.
    Out,
    /// Triples where the entity is the (entity) object.
    In,
    #[default]
    Both,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// Immutable, indexed set of triples.
///
/// Labels are canonical per id: the first label seen for an entity or
/// predicate wins, so two triples with the same ids are always equal.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    by_subject: HashMap<EntityId, Vec<usize>>,
    by_object: HashMap<EntityId, Vec<usize>>,
    entity_labels: HashMap<EntityId, String>,
    predicate_labels: HashMap<PropertyId, String>,
}

impl PartialEq for TripleStore {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for TripleStore {}

impl TripleStore {
    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let mut entity_labels: HashMap<EntityId, String> = HashMap::new();
        let mut predicate_labels: HashMap<PropertyId, String> = HashMap::new();
        let mut seen = BTreeSet::<TripleKey>::new();
        let mut kept = Vec::new();

        for t in triples {
            let s_label = entity_labels
                .entry(t.subject.qid)
                .or_insert_with(|| t.subject.label.clone())
                .clone();
            let p_label = predicate_labels
                .entry(t.predicate.pid)
                .or_insert_with(|| t.predicate.label.clone())
                .clone();
            let object = match t.object {
                Term::Entity(e) => {
                    let label = entity_labels.entry(e.qid).or_insert_with(|| e.label.clone()).clone();
                    Term::Entity(EntityRef { qid: e.qid, label })
                }
                lit => lit,
            };
            let canonical = Triple {
                subject: EntityRef {
                    qid: t.subject.qid,
                    label: s_label,
                },
                predicate: PredicateRef {
                    pid: t.predicate.pid,
                    label: p_label,
                },
                object,
            };
            if seen.insert(canonical.key()) {
                kept.push(canonical);
            }
        }
        kept.sort();

        let mut by_subject: HashMap<EntityId, Vec<usize>> = HashMap::new();
        let mut by_object: HashMap<EntityId, Vec<usize>> = HashMap::new();
        for (i, t) in kept.iter().enumerate() {
            by_subject.entry(t.subject.qid).or_default().push(i);
            if let Some(o) = t.object.qid() {
                by_object.entry(o).or_default().push(i);
            }
        }

        TripleStore {
            triples: kept,
            by_subject,
            by_object,
            entity_labels,
            predicate_labels,
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// All triples in sorted order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity_label(&self, qid: EntityId) -> Option<&str> {
        self.entity_labels.get(&qid).map(String::as_str)
    }

    pub fn predicate_label(&self, pid: PropertyId) -> Option<&str> {
        self.predicate_labels.get(&pid).map(String::as_str)
    }

    pub fn contains_entity(&self, qid: EntityId) -> bool {
        self.entity_labels.contains_key(&qid)
    }

    pub fn subject_triples(&self, qid: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_subject
            .get(&qid)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn object_triples(&self, qid: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_object
            .get(&qid)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    /// Incident triples in store order. Self-loops appear once.
    pub fn neighbors(&self, qid: EntityId, direction: Direction) -> Vec<Triple> {
        let mut idx: Vec<usize> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            idx.extend(self.by_subject.get(&qid).into_iter().flatten());
        }
        if matches!(direction, Direction::In | Direction::Both) {
            idx.extend(self.by_object.get(&qid).into_iter().flatten());
        }
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().map(|i| self.triples[i].clone()).collect()
    }

    /// Uniform sample without replacement of `min(k, degree)` incident triples.
    pub fn sample_one_hop<R: Rng + ?Sized>(
        &self,
        qid: EntityId,
        k: usize,
        direction: Direction,
        rng: &mut R,
    ) -> Vec<Triple> {
        sample_triples(self.neighbors(qid, direction), k, rng)
    }
}

/// Keeps a uniform random subset of `k` triples, preserving input order.
pub fn sample_triples<R: Rng + ?Sized>(triples: Vec<Triple>, k: usize, rng: &mut R) -> Vec<Triple> {
    if k >= triples.len() {
        return triples;
    }
    let mut picked = rand::seq::index::sample(rng, triples.len(), k).into_vec();
    picked.sort_unstable();
    let mut slots: Vec<Option<Triple>> = triples.into_iter().map(Some).collect();
    picked
        .into_iter()
        .map(|i| slots[i].take().expect("indices are distinct"))
        .collect()
}
