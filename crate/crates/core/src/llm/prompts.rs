use crate::kg::Triple;

/// Sufficiency check, exploration-set selection and question generation in
/// one prompt. `{triples}` is replaced by a JSON array of triples.
pub const GENERATOR_TEMPLATE: &str = r#"You are given a small set of RDF triples from Wikidata.

Format:
Each triple is a 3-item array:
["<label> (<Q-ID>)", "<predicate> (<P-ID>)", "<label> (<Q-ID>)"]

Triples:
{triples}

Your task is to determine whether this subgraph is sufficient to support a challenging and non-trivial question for a knowledge graph question answering (KGQA) benchmark.

Guidelines:

1. Reasoning Depth
- Prefer questions requiring at least 2-hop reasoning.
- Avoid generic topics or subclass chains—focus on instance-level, specific entities.
- Use factual constraints (e.g., date, affiliation) only when needed to disambiguate the answer or add meaningful specificity.
- Do not over-constrain—include only what is necessary to yield a specific answer.

2. Entity Selection and Expansion
- Focus on concrete, instance-level entities (e.g., Q7186), not types like Q5 (human) or Q11424 (film).
- Avoid generic classes like “scientist”, “award”, or “event”, and relations like “subclass of” or “instance of”.
- Prefer entities and paths supporting deeper reasoning—e.g., affiliations, recognitions, or spatiotemporal links.

3. Difficulty
- Encourage inverse relations, comparative logic, date/number filters, or set membership.
- Ensure the answer cannot be derived from general knowledge alone.
- The subgraph must contain all supporting information to answer the question.

4. Naturalness
- Phrase the question as a fluent, self-contained query a user might ask.
- Avoid references to the input format (e.g., "triples", "given data").
- Do not use phrases like:
  - "from the given data"
  - "among these entities"
  - "listed here"

5. Clarity
- The question must be unambiguous and logically imply a unique, specific answer.
- Avoid vague or underspecified language.

Output Format:

If the graph is not sufficient, return:
{
  "sufficient": false,
  "candidate": [<QID>, ..., <QID>]
}

If sufficient, return:
{
  "sufficient": true,
  "question": "<natural-language question>",
  "answer": ["<answer-label (QID)>", "..."],
  "proof": [
    ["<label (QID)>", "<predicate (PID)>", "<label (QID)>"],
    ...
  ]
}

Return strict JSON only — no commentary."#;

/// Query repair prompt. `{question}` and `{sparql}` are substituted.
pub const VALIDATOR_TEMPLATE: &str = r#"You are given a SPARQL query over Wikidata that returned no results.

Question:
{question}

Original SPARQL:
{sparql}

Your task is to revise the query so that it returns valid results from Wikidata.

Revision Guidelines:
- Use only essential triple patterns. Avoid OPTIONAL and FILTER clauses unless strictly necessary.
- The query must end with a single SERVICE wikibase:label clause to retrieve English labels.
- Ensure the query is syntactically valid and directly executable at https://query.wikidata.org.

Output Format:
Return a single JSON object in the exact format below — no commentary, no markdown:
{
  "correct_sparql": "<REVISED SPARQL QUERY HERE>"
}"#;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("prompt contract violated: {0}")]
pub struct ContractError(pub String);

/// Replaces each `{name}` placeholder that occurs in `template` in a single
/// left-to-right pass; substituted text is never rescanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        for (name, value) in values {
            let needle_len = name.len() + 2;
            let candidate = &rest[open..];
            if candidate.len() >= needle_len
                && candidate[1..].starts_with(name)
                && candidate[1 + name.len()..].starts_with('}')
            {
                out.push_str(&rest[..open]);
                out.push_str(value);
                rest = &rest[open + needle_len..];
                continue 'scan;
            }
        }
        out.push_str(&rest[..=open]);
        rest = &rest[open + 1..];
    }
    out.push_str(rest);
    out
}

/// JSON array of `[subject, predicate, object]` surface strings, one
/// triple per line.
pub fn triples_json(triples: &[Triple]) -> String {
    let lines: Vec<String> = triples
        .iter()
        .map(|t| {
            let [s, p, o] = t.surface();
            format!(
                "  [{}, {}, {}]",
                serde_json::Value::String(s),
                serde_json::Value::String(p),
                serde_json::Value::String(o)
            )
        })
        .collect();
    format!("[\n{}\n]", lines.join(",\n"))
}

pub fn render_generator_prompt(triples: &[Triple]) -> Result<String, ContractError> {
    if triples.is_empty() {
        return Err(ContractError("generator prompt needs at least one triple".into()));
    }
    Ok(fill(GENERATOR_TEMPLATE, &[("triples", &triples_json(triples))]))
}

pub fn render_validator_prompt(question: &str, sparql: &str) -> Result<String, ContractError> {
    if question.trim().is_empty() {
        return Err(ContractError("question must be non-empty".into()));
    }
    if sparql.trim().is_empty() {
        return Err(ContractError("sparql must be non-empty".into()));
    }
    Ok(fill(VALIDATOR_TEMPLATE, &[("question", question), ("sparql", sparql)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::parse_tsv;
    use sha2::{Digest, Sha256};

    const SCHLEYER_TSV: &str = "\
Johann Martin Schleyer\tQ12712\tnominated for\tP1411\tNobel Peace Prize\tQ35637
International Volapük Academy\tQ3358168\tfounded by\tP112\tJohann Martin Schleyer\tQ12712
Johann Martin Schleyer\tQ12712\tplace of birth\tP19\tOberlauda\tQ885402
";

    #[test]
    fn generator_prompt_embeds_surface_triples() {
        let store = parse_tsv(SCHLEYER_TSV).unwrap();
        let prompt = render_generator_prompt(store.triples()).unwrap();
        assert!(prompt
            .contains(r#"["Johann Martin Schleyer (Q12712)", "nominated for (P1411)", "Nobel Peace Prize (Q35637)"]"#));
        assert!(!prompt.contains("{triples}"));
        assert!(prompt.starts_with("You are given a small set of RDF triples from Wikidata."));
        assert!(prompt.ends_with("Return strict JSON only — no commentary."));
    }

    #[test]
    fn generator_prompt_is_byte_stable() {
        let store = parse_tsv(SCHLEYER_TSV).unwrap();
        let prompt = render_generator_prompt(store.triples()).unwrap();
        let digest = hex::encode(Sha256::digest(prompt.as_bytes()));
        assert_eq!(digest, GOLDEN_SCHLEYER_SHA256, "generator prompt drifted");
        let template = hex::encode(Sha256::digest(VALIDATOR_TEMPLATE.as_bytes()));
        assert_eq!(template, GOLDEN_VALIDATOR_SHA256, "validator template drifted");
    }

    const GOLDEN_SCHLEYER_SHA256: &str = "f6874fc61c96b9358f2b5841936d0fee6df478b45a1bd64fc617fa7b0256aaf1";
    const GOLDEN_VALIDATOR_SHA256: &str = "bb28e4722b3c4488cb723a38bd774b3dd59f29727978435a2b7551f25481b288";

    #[test]
    fn literal_objects_render_bare() {
        let store = parse_tsv("A\tQ1\tinception\tP571\t1990\tlit:date:1990-05-01\n").unwrap();
        let prompt = render_generator_prompt(store.triples()).unwrap();
        assert!(prompt.contains(r#"["A (Q1)", "inception (P571)", "1990-05-01"]"#));
    }

    #[test]
    fn single_triple_array() {
        let store = parse_tsv("A\tQ1\tp\tP2\tB\tQ2\n").unwrap();
        assert_eq!(
            triples_json(store.triples()),
            "[\n  [\"A (Q1)\", \"p (P2)\", \"B (Q2)\"]\n]"
        );
        assert!(render_generator_prompt(&[]).is_err());
    }

    #[test]
    fn validator_substitution_is_literal() {
        let q = "Which {sparql} thing {question}?";
        let s = "SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . }";
        let prompt = render_validator_prompt(q, s).unwrap();
        assert!(prompt.contains(q));
        assert!(prompt.contains(s));
        assert_eq!(prompt.matches("{sparql}").count(), 1);
        assert!(matches!(render_validator_prompt(q, "  "), Err(ContractError(_))));
    }

    #[test]
    fn fill_leaves_unknown_braces() {
        assert_eq!(fill("{a} {b} {", &[("a", "{b}")]), "{b} {b} {");
    }
}
