//! Tab-separated fixture format, one triple per line:
//!
//! ```text
//! s_label  s_qid  p_label  p_pid  o_label  o_qid | lit:<kind>:<value>
//! ```
//!
//! Blank lines and lines starting with `#` are skipped.

use std::fs;
use std::path::Path;

use super::{EntityId, EntityRef, PredicateRef, PropertyId, Term, Triple, TripleStore};

#[derive(Debug, thiserror::Error)]
pub enum TsvError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, field {field}: {message}")]
    Malformed {
        line: usize,
        field: &'static str,
        message: String,
    },
}

const FIELDS: [&str; 6] = ["s_label", "s_qid", "p_label", "p_pid", "o_label", "o_qid_or_literal"];

pub fn load_tsv(path: impl AsRef<Path>) -> Result<TripleStore, TsvError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tsv(&text)
}

pub fn parse_tsv(text: &str) -> Result<TripleStore, TsvError> {
    let mut triples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        triples.push(parse_line(line, line_no)?);
    }
    Ok(TripleStore::from_triples(triples))
}

fn parse_line(line: &str, line_no: usize) -> Result<Triple, TsvError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != FIELDS.len() {
        let field = FIELDS.get(fields.len()).copied().unwrap_or("o_qid_or_literal");
        return Err(TsvError::Malformed {
            line: line_no,
            field,
            message: format!("expected 6 tab-separated fields, found {}", fields.len()),
        });
    }
    let bad = |field: &'static str, message: String| TsvError::Malformed {
        line: line_no,
        field,
        message,
    };

    let s_qid: EntityId = fields[1].trim().parse().map_err(|e| bad("s_qid", format!("{e}")))?;
    let pid: PropertyId = fields[3].trim().parse().map_err(|e| bad("p_pid", format!("{e}")))?;
    let object_raw = fields[5];
    let object = if let Some(rest) = object_raw.strip_prefix("lit:") {
        let (kind, value) = rest
            .split_once(':')
            .ok_or_else(|| bad("o_qid_or_literal", "literal must be lit:<kind>:<value>".into()))?;
        let kind = kind.parse().map_err(|e| bad("o_qid_or_literal", e))?;
        Term::Literal {
            value: value.to_string(),
            kind,
        }
    } else {
        let o_qid: EntityId = object_raw
            .trim()
            .parse()
            .map_err(|e| bad("o_qid_or_literal", format!("{e}")))?;
        Term::Entity(EntityRef::new(o_qid, fields[4]))
    };

    Ok(Triple::new(
        EntityRef::new(s_qid, fields[0]),
        PredicateRef::new(pid, fields[2]),
        object,
    ))
}

pub fn to_tsv(store: &TripleStore) -> String {
    let mut out = String::new();
    for t in store.triples() {
        let (o_label, o_field) = match &t.object {
            Term::Entity(e) => (e.label.clone(), e.qid.to_string()),
            Term::Literal { value, kind } => (value.clone(), format!("lit:{}:{}", kind.as_str(), value)),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            t.subject.label, t.subject.qid, t.predicate.label, t.predicate.pid, o_label, o_field
        ));
    }
    out
}

pub fn write_tsv(store: &TripleStore, path: impl AsRef<Path>) -> Result<(), TsvError> {
    let path = path.as_ref();
    fs::write(path, to_tsv(store)).map_err(|source| TsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::LiteralKind;

    #[test]
    fn empty_and_comment_only() {
        assert_eq!(parse_tsv("").unwrap().len(), 0);
        assert_eq!(parse_tsv("# header\n\n").unwrap().len(), 0);
    }

    #[test]
    fn duplicate_lines_collapse() {
        let line = "A\tQ1\tp\tP2\tB\tQ2\n";
        assert_eq!(parse_tsv(&format!("{line}{line}")).unwrap().len(), 1);
    }

    #[test]
    fn literal_objects() {
        let store = parse_tsv("A\tQ1\tinception\tP571\t1990\tlit:date:1990-01-01\n").unwrap();
        assert_eq!(
            store.triples()[0].object,
            Term::Literal {
                value: "1990-01-01".into(),
                kind: LiteralKind::Date
            }
        );
    }

    #[test]
    fn malformed_lines_report_position() {
        let err = parse_tsv("# c\nA\tQ1\tp\tP2\tB\n").unwrap_err();
        match err {
            TsvError::Malformed { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "o_qid_or_literal");
            }
            other => panic!("{other}"),
        }
        let err = parse_tsv("A\tX1\tp\tP2\tB\tQ2\n").unwrap_err();
        assert!(matches!(
            err,
            TsvError::Malformed {
                line: 1,
                field: "s_qid",
                ..
            }
        ));
        let err = parse_tsv("A\tQ1\tp\tQ2\tB\tQ2\n").unwrap_err();
        assert!(matches!(err, TsvError::Malformed { field: "p_pid", .. }));
        let err = parse_tsv("A\tQ1\tp\tP2\tB\tlit:weird:1\n").unwrap_err();
        assert!(matches!(
            err,
            TsvError::Malformed {
                field: "o_qid_or_literal",
                ..
            }
        ));
    }

    #[test]
    fn io_error_names_path() {
        let err = load_tsv("/nonexistent/kg.tsv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/kg.tsv"));
    }
}
