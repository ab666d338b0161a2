//! Strict parsing of the generator and reviser JSON contracts.

use serde_json::{json, Map, Value};

use crate::kg::{split_surface, EntityId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed model output: {0}")]
pub struct FormatError(pub String);

fn bad(msg: impl Into<String>) -> FormatError {
    FormatError(msg.into())
}

/// What the generator decided about the current subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenerationOutcome {
    /// Needs more context; expand around these entities next.
    Insufficient { candidates: Vec<EntityId> },
    Sufficient {
        question: String,
        answers: Vec<String>,
        proof: Vec<[String; 3]>,
    },
}

impl GenerationOutcome {
    /// Serializes back into the contract shape.
    pub fn to_json(&self) -> Value {
        match self {
            GenerationOutcome::Insufficient { candidates } => json!({
                "sufficient": false,
                "candidate": candidates.iter().map(ToString::to_string).collect::<Vec<_>>(),
            }),
            GenerationOutcome::Sufficient {
                question,
                answers,
                proof,
            } => json!({
                "sufficient": true,
                "question": question,
                "answer": answers,
                "proof": proof,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRevision {
    pub correct_sparql: String,
}

/// Removes one surrounding markdown code fence (```` ``` ```` or ```` ```json ````).
pub fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let Some(body) = rest.strip_suffix("```") else {
        return t;
    };
    match body.find('\n') {
        Some(nl) if body[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => body[nl + 1..].trim(),
        _ => body.trim(),
    }
}

fn parse_object(text: &str) -> Result<Map<String, Value>, FormatError> {
    let body = strip_code_fence(text);
    match serde_json::from_str::<Value>(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(bad("top-level value is not an object")),
        Err(e) => Err(bad(format!("not valid JSON: {e}"))),
    }
}

fn non_empty_string(v: &Value, what: &str) -> Result<String, FormatError> {
    match v.as_str() {
        Some(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        Some(_) => Err(bad(format!("{what} is empty"))),
        None => Err(bad(format!("{what} is not a string"))),
    }
}

/// Accepts `"Q33541"` or `"Karakalpak (Q33541)"`.
fn candidate_id(v: &Value) -> Result<EntityId, FormatError> {
    let s = v
        .as_str()
        .ok_or_else(|| bad("candidate entries must be strings"))?
        .trim();
    if let Ok(q) = s.parse() {
        return Ok(q);
    }
    match split_surface(s) {
        (_, Some(id)) => id
            .parse()
            .map_err(|_| bad(format!("candidate {s:?} does not name an entity"))),
        _ => Err(bad(format!("candidate {s:?} carries no Q-id"))),
    }
}

pub fn parse_generation_response(text: &str) -> Result<GenerationOutcome, FormatError> {
    let obj = parse_object(text)?;
    let sufficient = obj
        .get("sufficient")
        .ok_or_else(|| bad("missing key \"sufficient\""))?
        .as_bool()
        .ok_or_else(|| bad("\"sufficient\" must be a boolean"))?;

    if !sufficient {
        let list = obj
            .get("candidate")
            .ok_or_else(|| bad("missing key \"candidate\""))?
            .as_array()
            .ok_or_else(|| bad("\"candidate\" must be an array"))?;
        if list.is_empty() {
            return Err(bad("\"candidate\" is empty"));
        }
        let candidates = list.iter().map(candidate_id).collect::<Result<Vec<_>, _>>()?;
        return Ok(GenerationOutcome::Insufficient { candidates });
    }

    let question = non_empty_string(
        obj.get("question").ok_or_else(|| bad("missing key \"question\""))?,
        "question",
    )?;
    let answers = obj
        .get("answer")
        .ok_or_else(|| bad("missing key \"answer\""))?
        .as_array()
        .ok_or_else(|| bad("\"answer\" must be an array"))?
        .iter()
        .map(|a| non_empty_string(a, "answer entry"))
        .collect::<Result<Vec<_>, _>>()?;
    if answers.is_empty() {
        return Err(bad("\"answer\" is empty"));
    }
    let proof = obj
        .get("proof")
        .ok_or_else(|| bad("missing key \"proof\""))?
        .as_array()
        .ok_or_else(|| bad("\"proof\" must be an array"))?
        .iter()
        .map(|t| {
            let parts = t.as_array().ok_or_else(|| bad("proof entries must be arrays"))?;
            if parts.len() != 3 {
                return Err(bad(format!("proof entry has {} elements, expected 3", parts.len())));
            }
            Ok([
                non_empty_string(&parts[0], "proof subject")?,
                non_empty_string(&parts[1], "proof predicate")?,
                non_empty_string(&parts[2], "proof object")?,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    if proof.is_empty() {
        return Err(bad("\"proof\" is empty"));
    }
    Ok(GenerationOutcome::Sufficient {
        question,
        answers,
        proof,
    })
}

pub fn parse_revision_response(text: &str) -> Result<QueryRevision, FormatError> {
    let obj = parse_object(text)?;
    let sparql = obj
        .get("correct_sparql")
        .ok_or_else(|| bad("missing key \"correct_sparql\""))?;
    Ok(QueryRevision {
        correct_sparql: non_empty_string(sparql, "correct_sparql")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const KARAKALPAKSTAN_OUTPUT: &str = r#"{
  "sufficient": false,
  "candidate": ["Q33541", "Q489898", "Q238931"]
}"#;

    const ASTRO_JOURNAL_OUTPUT: &str = r#"{
  "sufficient": true,
  "question": "What astronomical journal, published by EDP Sciences and edited by Thierry Forveille, succeeded Zeitschrift für Astrophysik as its immediate follower?",
  "answer": ["Astronomy and Astrophysics (Q752075)"],
  "proof": [
    ["Astronomy and Astrophysics (Q752075)", "publisher (P123)", "EDP Sciences (Q114404)"],
    ["Astronomy and Astrophysics (Q752075)", "editor (P98)", "Thierry Forveille (Q46260676)"],
    ["Zeitschrift für Astrophysik (Q3575110)", "followed by (P156)", "Astronomy and Astrophysics (Q752075)"]
  ]
}"#;

    #[test]
    fn insufficient_example() {
        let out = parse_generation_response(KARAKALPAKSTAN_OUTPUT).unwrap();
        let ids: Vec<String> = match out {
            GenerationOutcome::Insufficient { candidates } => candidates.iter().map(ToString::to_string).collect(),
            other => panic!("{other:?}"),
        };
        assert_eq!(ids, ["Q33541", "Q489898", "Q238931"]);
    }

    #[test]
    fn sufficient_example() {
        match parse_generation_response(ASTRO_JOURNAL_OUTPUT).unwrap() {
            GenerationOutcome::Sufficient {
                question,
                answers,
                proof,
            } => {
                assert!(question.contains("EDP Sciences"));
                assert_eq!(answers, ["Astronomy and Astrophysics (Q752075)"]);
                assert_eq!(proof.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_json_and_bad_shapes() {
        for text in [
            "not json at all",
            "[1, 2]",
            r#"{"candidate": ["Q1"]}"#,
            r#"{"sufficient": "no", "candidate": ["Q1"]}"#,
            r#"{"sufficient": false, "candidate": []}"#,
            r#"{"sufficient": false, "candidate": ["Paris"]}"#,
            r#"{"sufficient": false, "candidate": [42]}"#,
            r#"{"sufficient": true, "question": "q?", "answer": [], "proof": [["a","b","c"]]}"#,
            r#"{"sufficient": true, "question": "", "answer": ["x"], "proof": [["a","b","c"]]}"#,
            r#"{"sufficient": true, "question": "q?", "answer": ["x"], "proof": [["a","b"]]}"#,
            r#"{"sufficient": true, "question": "q?", "answer": ["x"], "proof": []}"#,
            r#"{"sufficient": true, "question": "q?", "answer": ["x"]}"#,
        ] {
            assert!(parse_generation_response(text).is_err(), "accepted {text}");
        }
    }

    #[test]
    fn candidates_with_labels_are_normalized() {
        let out =
            parse_generation_response(r#"{"sufficient": false, "candidate": ["Karakalpak (Q33541)", " Q489898 "]}"#)
                .unwrap();
        assert_eq!(
            out,
            GenerationOutcome::Insufficient {
                candidates: vec!["Q33541".parse().unwrap(), "Q489898".parse().unwrap()]
            }
        );
    }

    #[test]
    fn revision_parsing() {
        let plain = r#"{"correct_sparql":"SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . } LIMIT 1"}"#;
        let fenced = format!("```json\n{plain}\n```");
        let a = parse_revision_response(plain).unwrap();
        assert_eq!(a.correct_sparql, "SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . } LIMIT 1");
        assert_eq!(parse_revision_response(&fenced).unwrap(), a);
        assert!(parse_revision_response(r#"{"sparql": "SELECT ?x WHERE { ?x ?p ?o }"}"#).is_err());
        assert!(parse_revision_response(r#"{"correct_sparql": ""}"#).is_err());
    }

    #[test]
    fn fence_stripping_is_single_layer() {
        assert_eq!(strip_code_fence("```\n{}\n```"), "{}");
        assert_eq!(strip_code_fence("  ```json\n{\"a\":1}\n```  "), "{\"a\":1}");
        assert_eq!(strip_code_fence("{}"), "{}");
        assert!(parse_generation_response("```json\n```json\n{}\n```\n```").is_err());
    }
}
