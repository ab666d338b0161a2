//! Symbolic validation: execute the instance query, compare the retrieved
//! answers with the generated ones, and let a reviser LLM repair the query a
//! bounded number of times.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::InstanceRecord;
use crate::kg::{split_surface, EntityId};
use crate::llm::{parse_revision_response, render_validator_prompt, ChatProvider, ChatRequest};
use crate::sparql::{KgBackend, ResultSet};

/// Canonical form of one answer, compared by id when both sides have one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnswerKey {
    pub qid: Option<EntityId>,
    pub normalized_label: String,
}

impl AnswerKey {
    fn matches(&self, other: &AnswerKey) -> bool {
        match (self.qid, other.qid) {
            (Some(a), Some(b)) => a == b,
            _ => self.normalized_label == other.normalized_label,
        }
    }
}

/// Lowercase, trimmed, internal whitespace collapsed to single spaces.
pub fn normalize_label(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn canonicalize_answer(raw: &str) -> AnswerKey {
    match split_surface(raw) {
        (label, Some(id)) if id.starts_with('Q') => AnswerKey {
            qid: id.parse().ok(),
            normalized_label: normalize_label(&label),
        },
        _ => AnswerKey {
            qid: None,
            normalized_label: normalize_label(raw),
        },
    }
}

/// One key per distinct value bound to any projected variable. Entity values
/// are deduplicated by id.
pub fn resultset_to_answers(rs: &ResultSet) -> BTreeSet<AnswerKey> {
    let mut out: Vec<AnswerKey> = Vec::new();
    for row in &rs.rows {
        for var in &rs.variables {
            let Some(b) = row.get(var) else { continue };
            let key = if let Some(q) = b.qid {
                AnswerKey {
                    qid: Some(q),
                    normalized_label: b.label.as_deref().map(normalize_label).unwrap_or_default(),
                }
            } else if let Some(text) = b.literal.as_deref().or(b.label.as_deref()) {
                AnswerKey {
                    qid: None,
                    normalized_label: normalize_label(text),
                }
            } else if let Some(p) = b.pid {
                AnswerKey {
                    qid: None,
                    normalized_label: normalize_label(&p.to_string()),
                }
            } else {
                continue;
            };
            let dup = out.iter().any(|k| match (k.qid, key.qid) {
                (Some(a), Some(b)) => a == b,
                (None, None) => k.normalized_label == key.normalized_label,
                _ => false,
            });
            if !dup {
                out.push(key);
            }
        }
    }
    out.into_iter().collect()
}

/// True iff a perfect one-to-one matching exists between `a` and `b`.
pub fn answers_equal(a: &BTreeSet<AnswerKey>, b: &BTreeSet<AnswerKey>) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let a: Vec<&AnswerKey> = a.iter().collect();
    let b: Vec<&AnswerKey> = b.iter().collect();
    let adj: Vec<Vec<usize>> = a
        .iter()
        .map(|x| (0..b.len()).filter(|&j| x.matches(b[j])).collect())
        .collect();
    // Kuhn's augmenting paths.
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; b.len()];
    (0..a.len()).all(|i| augment(i, &adj, &mut vec![false; b.len()], &mut owner))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    NonExecutable,
    Empty,
    Mismatch,
    Infrastructure,
}

/// What happened to one query during validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// 0 for the instance's own query, then 1..=max revisions.
    pub attempt: u32,
    pub sparql: String,
    pub failure: Option<FailureClass>,
    pub retrieved: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationOutcome {
    Accepted {
        final_sparql: String,
        retrieved: BTreeSet<AnswerKey>,
        attempts: u32,
        trace: Vec<AttemptRecord>,
    },
    Rejected {
        reason: FailureClass,
        attempts: u32,
        trace: Vec<AttemptRecord>,
    },
}

impl ValidationOutcome {
    pub fn attempts(&self) -> u32 {
        match self {
            ValidationOutcome::Accepted { attempts, .. } | ValidationOutcome::Rejected { attempts, .. } => *attempts,
        }
    }

    pub fn trace(&self) -> &[AttemptRecord] {
        match self {
            ValidationOutcome::Accepted { trace, .. } | ValidationOutcome::Rejected { trace, .. } => trace,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, ValidationOutcome::Accepted { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub revision_model: String,
    pub max_attempts: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            revision_model: "gpt-4.1-mini".into(),
            max_attempts: 3,
        }
    }
}

/// Shown to the reviser when no query could be synthesized at all.
pub const MISSING_QUERY: &str = "# no query could be derived from the proof";

enum Check {
    Pass(BTreeSet<AnswerKey>),
    Fail(FailureClass, usize, Option<String>),
}

fn check(sparql: &str, gold: &BTreeSet<AnswerKey>, backend: &dyn KgBackend) -> Check {
    if sparql.trim().is_empty() {
        return Check::Fail(FailureClass::NonExecutable, 0, Some("no query".into()));
    }
    match backend.execute(sparql) {
        Err(e) if e.is_infrastructure() => Check::Fail(FailureClass::Infrastructure, 0, Some(e.to_string())),
        Err(e) => Check::Fail(FailureClass::NonExecutable, 0, Some(e.to_string())),
        Ok(rs) => {
            let got = resultset_to_answers(&rs);
            if got.is_empty() {
                Check::Fail(FailureClass::Empty, 0, None)
            } else if answers_equal(&got, gold) {
                Check::Pass(got)
            } else {
                Check::Fail(FailureClass::Mismatch, got.len(), None)
            }
        }
    }
}

/// Validates `record.sparql`, soliciting up to `opts.max_attempts`
/// revisions. Never alters anything but the query.
pub fn validate(
    record: &InstanceRecord,
    backend: &dyn KgBackend,
    llm: &dyn ChatProvider,
    opts: &VerifyOptions,
) -> ValidationOutcome {
    let gold: BTreeSet<AnswerKey> = record.answers.iter().map(|a| canonicalize_answer(a)).collect();
    let mut trace = Vec::new();
    if gold.is_empty() {
        return ValidationOutcome::Rejected {
            reason: FailureClass::Mismatch,
            attempts: 0,
            trace,
        };
    }
    let reject = |reason, attempts, trace| ValidationOutcome::Rejected {
        reason,
        attempts,
        trace,
    };

    let mut current = record.sparql.clone();
    let mut last = FailureClass::NonExecutable;
    for attempt in 0..=opts.max_attempts {
        if attempt > 0 {
            let shown = if current.trim().is_empty() {
                MISSING_QUERY
            } else {
                current.as_str()
            };
            let reply = render_validator_prompt(&record.question, shown)
                .map_err(|e| (FailureClass::NonExecutable, e.to_string()))
                .and_then(|prompt| {
                    llm.complete(&ChatRequest::user(&opts.revision_model, prompt))
                        .map_err(|e| (FailureClass::Infrastructure, e.to_string()))
                });
            let revised = match reply {
                Ok(text) => parse_revision_response(&text)
                    .map(|r| r.correct_sparql)
                    .map_err(|e| (FailureClass::NonExecutable, e.to_string())),
                Err(e) => Err(e),
            };
            match revised {
                Ok(q) => current = q,
                Err((class, detail)) => {
                    // An unusable reply spends the attempt; the previous
                    // query is shown again next time.
                    trace.push(AttemptRecord {
                        attempt,
                        sparql: String::new(),
                        failure: Some(class),
                        retrieved: 0,
                        detail: Some(detail),
                    });
                    if class == FailureClass::Infrastructure {
                        return reject(class, attempt, trace);
                    }
                    last = class;
                    continue;
                }
            }
        }

        match check(&current, &gold, backend) {
            Check::Pass(got) => {
                trace.push(AttemptRecord {
                    attempt,
                    sparql: current.clone(),
                    failure: None,
                    retrieved: got.len(),
                    detail: None,
                });
                return ValidationOutcome::Accepted {
                    final_sparql: current,
                    retrieved: got,
                    attempts: attempt,
                    trace,
                };
            }
            Check::Fail(class, retrieved, detail) => {
                trace.push(AttemptRecord {
                    attempt,
                    sparql: current.clone(),
                    failure: Some(class),
                    retrieved,
                    detail,
                });
                if class == FailureClass::Infrastructure {
                    return reject(class, attempt, trace);
                }
                last = class;
            }
        }
    }
    reject(last, opts.max_attempts, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{RecordMeta, SeedRef, EPOCH};
    use crate::kg::{parse_tsv, TripleStore};
    use crate::llm::ScriptedProvider;

    const FIXTURE: &str = "\
Johann Martin Schleyer\tQ12712\tnominated for\tP1411\tNobel Peace Prize\tQ35637
International Volapük Academy\tQ3358168\tfounded by\tP112\tJohann Martin Schleyer\tQ12712
Johann Martin Schleyer\tQ12712\tplace of birth\tP19\tOberlauda\tQ885402
";
    const GOOD: &str = "SELECT ?ans WHERE { ?ans wdt:P1411 wd:Q35637 . wd:Q3358168 wdt:P112 ?ans . SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\" . } }";
    const EMPTY: &str = "SELECT ?ans WHERE { ?ans wdt:P1411 wd:Q1 . }";

    fn store() -> TripleStore {
        parse_tsv(FIXTURE).unwrap()
    }

    fn record(sparql: &str) -> InstanceRecord {
        InstanceRecord {
            id: "x".into(),
            seed: SeedRef {
                label: "Johann Martin Schleyer".into(),
                qid: "Q12712".parse().unwrap(),
            },
            question: "Who founded the International Volapük Academy and was nominated for the Nobel Peace Prize?"
                .into(),
            answers: vec!["Johann Martin Schleyer (Q12712)".into()],
            proof: vec![["a".into(), "b".into(), "c".into()]],
            sparql: sparql.into(),
            meta: RecordMeta {
                iterations: 0,
                validation_attempts: None,
                model: "m".into(),
                created_at: EPOCH.into(),
            },
        }
    }

    fn revision(q: &str) -> String {
        serde_json::json!({ "correct_sparql": q }).to_string()
    }

    #[test]
    fn canonical_forms() {
        let k = canonicalize_answer("Johann Martin Schleyer (Q12712)");
        assert_eq!(k.qid, Some("Q12712".parse().unwrap()));
        assert_eq!(k.normalized_label, "johann martin schleyer");
        assert_eq!(
            canonicalize_answer("AUD"),
            AnswerKey {
                qid: None,
                normalized_label: "aud".into()
            }
        );
        let k = canonicalize_answer("  Mixed  Case (Q1) ");
        assert_eq!(
            (k.qid, k.normalized_label.as_str()),
            (Some(EntityId::new(1)), "mixed case")
        );
        assert_eq!(canonicalize_answer("instance of (P31)").qid, None);
    }

    #[test]
    fn equality_rules() {
        let set = |xs: &[&str]| xs.iter().map(|x| canonicalize_answer(x)).collect::<BTreeSet<_>>();
        assert!(answers_equal(
            &set(&["Johann (Q12712)"]),
            &set(&["johann martin schleyer (Q12712)"])
        ));
        assert!(!answers_equal(&set(&["AUD"]), &set(&["Australian dollar"])));
        assert!(answers_equal(&set(&[]), &set(&[])));
        assert!(!answers_equal(&set(&["A (Q1)"]), &set(&["A (Q2)"])));
        assert!(answers_equal(&set(&["1990"]), &set(&["1990"])));
        assert!(!answers_equal(&set(&["A (Q1)"]), &set(&["A (Q1)", "b"])));
        // Label fallback needs the matching to be global, not greedy.
        assert!(answers_equal(&set(&["x (Q1)", "x"]), &set(&["x (Q2)", "x (Q1)"])));
    }

    #[test]
    fn resultset_dedups_entities() {
        let rs = store().execute("SELECT ?s WHERE { ?s ?p ?o . }").unwrap();
        assert_eq!(rs.rows.len(), 3);
        let keys = resultset_to_answers(&rs);
        assert_eq!(keys.len(), 2);
        assert!(resultset_to_answers(&ResultSet::default()).is_empty());
        let rs = store().execute(GOOD).unwrap();
        let keys: Vec<_> = resultset_to_answers(&rs).into_iter().collect();
        assert_eq!(keys, vec![canonicalize_answer("Johann Martin Schleyer (Q12712)")]);
    }

    #[test]
    fn accepts_synthesized_query_without_llm() {
        let llm = ScriptedProvider::queue(Vec::<String>::new());
        let out = validate(&record(GOOD), &store(), &llm, &VerifyOptions::default());
        assert!(out.is_accepted());
        assert_eq!(out.attempts(), 0);
        assert_eq!(llm.calls(), 0);
    }

    #[test]
    fn one_revision_fixes_empty_result() {
        let llm = ScriptedProvider::queue([revision(GOOD)]);
        match validate(&record(EMPTY), &store(), &llm, &VerifyOptions::default()) {
            ValidationOutcome::Accepted {
                final_sparql,
                attempts,
                trace,
                ..
            } => {
                assert_eq!(final_sparql, GOOD);
                assert_eq!(attempts, 1);
                assert_eq!(trace[0].failure, Some(FailureClass::Empty));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_failed_revisions_reject() {
        let llm = ScriptedProvider::queue([revision(EMPTY), revision(EMPTY), revision(EMPTY), revision(GOOD)]);
        let out = validate(&record(EMPTY), &store(), &llm, &VerifyOptions::default());
        assert_eq!(
            out,
            ValidationOutcome::Rejected {
                reason: FailureClass::Empty,
                attempts: 3,
                trace: out.trace().to_vec()
            }
        );
        assert_eq!(out.trace().len(), 4);
        assert_eq!(llm.calls(), 3);
    }

    #[test]
    fn garbage_revisions_spend_attempts() {
        let llm = ScriptedProvider::queue(["nope", "{}", "```json\n[]\n```"]);
        let out = validate(&record("SELECT nonsense"), &store(), &llm, &VerifyOptions::default());
        assert!(matches!(
            out,
            ValidationOutcome::Rejected {
                reason: FailureClass::NonExecutable,
                attempts: 3,
                ..
            }
        ));
        assert_eq!(llm.calls(), 3);
    }

    #[test]
    fn mismatch_and_missing_query() {
        let wrong = "SELECT ?ans WHERE { ?ans wdt:P19 ?o . }";
        let llm = ScriptedProvider::queue([revision(wrong), revision(wrong), revision(wrong)]);
        let mut r = record("");
        r.answers = vec!["Oberlauda (Q885402)".into()];
        let out = validate(&r, &store(), &llm, &VerifyOptions::default());
        assert!(matches!(
            out,
            ValidationOutcome::Rejected {
                reason: FailureClass::Mismatch,
                attempts: 3,
                ..
            }
        ));
        assert_eq!(out.trace()[0].failure, Some(FailureClass::NonExecutable));
    }

    #[test]
    fn exhausted_provider_is_infrastructure() {
        let llm = ScriptedProvider::queue(Vec::<String>::new());
        let out = validate(&record(EMPTY), &store(), &llm, &VerifyOptions::default());
        assert!(matches!(
            out,
            ValidationOutcome::Rejected {
                reason: FailureClass::Infrastructure,
                attempts: 1,
                ..
            }
        ));
    }
}
