//! Basic-graph-pattern evaluation by backtracking over the store indexes.

use std::collections::HashMap;

use super::{BoundValue, PatternTerm, Query, ResultSet, Row};
use crate::kg::{EntityId, LiteralKind, PropertyId, Term, Triple, TripleStore};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    Entity(EntityId),
    Predicate(PropertyId),
    Literal(LiteralKind, String),
}

#[derive(Debug, Clone)]
enum Slot {
    Var(usize),
    Entity(EntityId),
    Predicate(PropertyId),
    Literal(String),
}

struct Compiled {
    s: Slot,
    p: Slot,
    o: Slot,
}

fn compile(term: &PatternTerm, vars: &mut HashMap<String, usize>) -> Slot {
    match term {
        PatternTerm::Var(name) => {
            let n = vars.len();
            Slot::Var(*vars.entry(name.clone()).or_insert(n))
        }
        PatternTerm::Entity(q) => Slot::Entity(*q),
        PatternTerm::Predicate(p) => Slot::Predicate(*p),
        PatternTerm::Literal(s) => Slot::Literal(s.clone()),
    }
}

fn object_value(t: &Triple) -> Value {
    match &t.object {
        Term::Entity(e) => Value::Entity(e.qid),
        Term::Literal { value, kind } => Value::Literal(*kind, value.clone()),
    }
}

/// Unifies `slot` with `value`; returns `Some(newly_bound_var)` on success.
fn unify(slot: &Slot, value: Value, bindings: &mut [Option<Value>]) -> Option<Option<usize>> {
    match slot {
        Slot::Var(i) => match &bindings[*i] {
            Some(b) => (*b == value).then_some(None),
            None => {
                bindings[*i] = Some(value);
                Some(Some(*i))
            }
        },
        Slot::Entity(q) => (value == Value::Entity(*q)).then_some(None),
        Slot::Predicate(p) => (value == Value::Predicate(*p)).then_some(None),
        Slot::Literal(s) => matches!(&value, Value::Literal(_, v) if v == s).then_some(None),
    }
}

fn resolved_entity(slot: &Slot, bindings: &[Option<Value>]) -> Option<Option<EntityId>> {
    // Some(Some(q)): bound to entity q; Some(None): bound to a non-entity
    // (cannot match); None: free.
    match slot {
        Slot::Entity(q) => Some(Some(*q)),
        Slot::Var(i) => match &bindings[*i] {
            Some(Value::Entity(q)) => Some(Some(*q)),
            Some(_) => Some(None),
            None => None,
        },
        Slot::Predicate(_) => Some(None),
        Slot::Literal(_) => None,
    }
}

struct Search<'a> {
    store: &'a TripleStore,
    patterns: Vec<Compiled>,
    bindings: Vec<Option<Value>>,
    solutions: Vec<Vec<Option<Value>>>,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) {
        if depth == self.patterns.len() {
            self.solutions.push(self.bindings.clone());
            return;
        }
        let store = self.store;
        let pat = &self.patterns[depth];
        let candidates: Box<dyn Iterator<Item = &Triple>> = match resolved_entity(&pat.s, &self.bindings) {
            Some(Some(q)) => Box::new(store.subject_triples(q)),
            Some(None) => return,
            None => match (&pat.o, resolved_entity(&pat.o, &self.bindings)) {
                (Slot::Literal(_), _) => Box::new(store.triples().iter()),
                (_, Some(Some(q))) => Box::new(store.object_triples(q)),
                (Slot::Var(_), Some(None)) => Box::new(store.triples().iter()),
                (_, Some(None)) => return,
                (_, None) => Box::new(store.triples().iter()),
            },
        };
        let candidates: Vec<&Triple> = candidates.collect();

        for t in candidates {
            let pat = &self.patterns[depth];
            let mut bound: Vec<usize> = Vec::with_capacity(3);
            let ok = [
                (&pat.s, Value::Entity(t.subject.qid)),
                (&pat.p, Value::Predicate(t.predicate.pid)),
                (&pat.o, object_value(t)),
            ]
            .into_iter()
            .all(|(slot, value)| match unify(slot, value, &mut self.bindings) {
                Some(newly) => {
                    bound.extend(newly);
                    true
                }
                None => false,
            });
            if ok {
                self.run(depth + 1);
            }
            for i in bound {
                self.bindings[i] = None;
            }
        }
    }
}

fn bound_value(value: &Value, store: &TripleStore, with_label: bool) -> BoundValue {
    match value {
        Value::Entity(q) => BoundValue::entity(
            *q,
            with_label.then(|| {
                store
                    .entity_label(*q)
                    .map(str::to_string)
                    .unwrap_or_else(|| q.to_string())
            }),
        ),
        Value::Predicate(p) => BoundValue {
            pid: Some(*p),
            label: with_label.then(|| {
                store
                    .predicate_label(*p)
                    .map(str::to_string)
                    .unwrap_or_else(|| p.to_string())
            }),
            ..Default::default()
        },
        Value::Literal(_, s) => BoundValue::literal(s.clone()),
    }
}

fn label_only(value: &Value, store: &TripleStore) -> BoundValue {
    let b = bound_value(value, store, true);
    BoundValue {
        label: b.label.or(b.literal),
        ..Default::default()
    }
}

/// Evaluates a parsed query against the store with set-of-mappings
/// semantics; rows come back sorted by their bound values.
pub fn evaluate(query: &Query, store: &TripleStore) -> ResultSet {
    let mut vars: HashMap<String, usize> = HashMap::new();
    let patterns: Vec<Compiled> = query
        .patterns
        .iter()
        .map(|p| Compiled {
            s: compile(&p.subject, &mut vars),
            p: compile(&p.predicate, &mut vars),
            o: compile(&p.object, &mut vars),
        })
        .collect();
    let mut search = Search {
        store,
        patterns,
        bindings: vec![None; vars.len()],
        solutions: Vec::new(),
    };
    search.run(0);

    let variables = query.result_variables();
    let mut rows: Vec<Row> = Vec::with_capacity(search.solutions.len());
    for sol in &search.solutions {
        let mut row = Row::new();
        for name in &variables {
            let value = if let Some(&i) = vars.get(name) {
                let v = sol[i].as_ref().expect("every pattern variable is bound");
                bound_value(v, store, query.label_service)
            } else {
                let stem = query.label_stem(name).expect("projection validated by the parser");
                label_only(sol[vars[stem]].as_ref().expect("bound"), store)
            };
            row.insert(name.clone(), value);
        }
        rows.push(row);
    }

    let mut rs = ResultSet { variables, rows };
    rs.sort_rows();
    if query.distinct {
        rs.rows.dedup();
    }
    if let Some(n) = query.limit {
        rs.rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }
    rs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::parse_tsv;
    use crate::sparql::parse;

    const FIXTURE: &str = "\
Johann Martin Schleyer\tQ12712\tnominated for\tP1411\tNobel Peace Prize\tQ35637
International Volapük Academy\tQ3358168\tfounded by\tP112\tJohann Martin Schleyer\tQ12712
Johann Martin Schleyer\tQ12712\tplace of birth\tP19\tOberlauda\tQ885402
";

    #[test]
    fn schleyer_query_returns_one_row() {
        let store = parse_tsv(FIXTURE).unwrap();
        let q = parse(r#"SELECT ?x WHERE { ?x wdt:P1411 wd:Q35637 . ?a wdt:P112 ?x . SERVICE wikibase:label { bd:serviceParam wikibase:language "en". } }"#).unwrap();
        let rs = evaluate(&q, &store);
        assert_eq!(rs.variables, vec!["x"]);
        assert_eq!(rs.rows.len(), 1);
        let x = &rs.rows[0]["x"];
        assert_eq!(x.qid, Some("Q12712".parse().unwrap()));
        assert_eq!(x.label.as_deref(), Some("Johann Martin Schleyer"));
    }

    #[test]
    fn unknown_predicate_is_empty() {
        let store = parse_tsv(FIXTURE).unwrap();
        let q = parse("SELECT ?x WHERE { ?x wdt:P9999 wd:Q1 . }").unwrap();
        assert!(evaluate(&q, &store).is_empty());
    }

    #[test]
    fn disconnected_patterns_form_product() {
        let store = parse_tsv(FIXTURE).unwrap();
        let q = parse("SELECT ?a ?b WHERE { ?a wdt:P1411 ?x . ?b ?p ?c . }").unwrap();
        assert_eq!(evaluate(&q, &store).rows.len(), 3);
        let q = parse("SELECT DISTINCT ?a WHERE { ?a ?p ?x . ?b ?q ?c . }").unwrap();
        assert_eq!(evaluate(&q, &store).rows.len(), 2);
        let q = parse("SELECT ?a WHERE { ?a ?p ?x . ?b ?q ?c . }").unwrap();
        assert_eq!(evaluate(&q, &store).rows.len(), 9);
    }

    #[test]
    fn labels_only_with_service() {
        let store = parse_tsv(FIXTURE).unwrap();
        let q = parse("SELECT ?x WHERE { ?x wdt:P19 ?y . }").unwrap();
        assert_eq!(evaluate(&q, &store).rows[0]["x"].label, None);
        let q = parse("SELECT ?yLabel WHERE { ?x wdt:P19 ?y . SERVICE wikibase:label { } }").unwrap();
        let rs = evaluate(&q, &store);
        assert_eq!(rs.rows[0]["yLabel"].label.as_deref(), Some("Oberlauda"));
    }

    #[test]
    fn limit_and_literals() {
        let store =
            parse_tsv("A\tQ1\tinception\tP571\t1990\tlit:date:1990\nB\tQ2\tinception\tP571\t1990\tlit:number:1990\n")
                .unwrap();
        let q = parse("SELECT ?x WHERE { ?x wdt:P571 \"1990\" . }").unwrap();
        assert_eq!(evaluate(&q, &store).rows.len(), 2);
        let q = parse("SELECT ?x WHERE { ?x wdt:P571 \"1990\" . } LIMIT 1").unwrap();
        assert_eq!(evaluate(&q, &store).rows.len(), 1);
        let q = parse("SELECT ?v WHERE { ?x wdt:P571 ?v . }").unwrap();
        let rs = evaluate(&q, &store);
        assert_eq!(rs.rows[0]["v"].literal.as_deref(), Some("1990"));
    }

    #[test]
    fn repeated_variable_in_one_pattern() {
        let store = parse_tsv("A\tQ1\tsame\tP1\tA\tQ1\nA\tQ1\tsame\tP1\tB\tQ2\n").unwrap();
        let q = parse("SELECT ?x WHERE { ?x wdt:P1 ?x . }").unwrap();
        let rs = evaluate(&q, &store);
        assert_eq!(rs.rows.len(), 1);
        assert_eq!(rs.rows[0]["x"].qid, Some(EntityId::new(1)));
    }
}
