use super::{PatternTerm, Query, TriplePattern};

const ENTITY_IRI: &str = "http://www.wikidata.org/entity/";
const DIRECT_IRI: &str = "http://www.wikidata.org/prop/direct/";
const KNOWN_PREFIXES: [&str; 5] = ["wd", "wdt", "rdfs", "wikibase", "bd"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SPARQL parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    PName(String, String),
    Iri(String),
    Str(String),
    Number(String),
    Word(String),
    Punct(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("?{v}"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::Iri(i) => format!("<{i}>"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Number(n) => n.clone(),
            Tok::Word(w) => w.clone(),
            Tok::Punct(c) => c.to_string(),
        }
    }

    fn is_word(&self, kw: &str) -> bool {
        matches!(self, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

fn err(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        position,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let pos = |i: usize| chars.get(i).map(|&(p, _)| p).unwrap_or(text.len());

    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '?' || c == '$' {
            let mut j = i + 1;
            while at(j).is_some_and(is_name_char) {
                j += 1;
            }
            if j == i + 1 {
                return Err(err(start, format!("unexpected '{c}'")));
            }
            let name: String = chars[i + 1..j].iter().map(|&(_, c)| c).collect();
            if name.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(err(start, format!("invalid variable name {name:?}")));
            }
            toks.push((start, Tok::Var(name)));
            i = j;
            continue;
        }
        if c == '<' {
            let mut j = i + 1;
            while at(j).is_some_and(|c| c != '>' && !c.is_whitespace()) {
                j += 1;
            }
            if at(j) != Some('>') {
                return Err(err(start, "unterminated IRI"));
            }
            let iri: String = chars[i + 1..j].iter().map(|&(_, c)| c).collect();
            toks.push((start, Tok::Iri(iri)));
            i = j + 1;
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            let mut j = i + 1;
            let mut value = String::new();
            loop {
                match at(j) {
                    None | Some('\n') => return Err(err(start, "unterminated string literal")),
                    Some('\\') => {
                        let esc = at(j + 1).ok_or_else(|| err(pos(j), "dangling escape"))?;
                        value.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            '"' | '\'' | '\\' => esc,
                            other => return Err(err(pos(j), format!("unknown escape \\{other}"))),
                        });
                        j += 2;
                    }
                    Some(q) if q == quote => break,
                    Some(other) => {
                        value.push(other);
                        j += 1;
                    }
                }
            }
            j += 1;
            // Language tags and datatypes are accepted and dropped.
            if at(j) == Some('@') {
                j += 1;
                while at(j).is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                    j += 1;
                }
            } else if at(j) == Some('^') && at(j + 1) == Some('^') {
                j += 2;
                if at(j) == Some('<') {
                    while at(j).is_some_and(|c| c != '>') {
                        j += 1;
                    }
                    j += 1;
                } else {
                    while at(j).is_some_and(|c| is_name_char(c) || c == ':' || c == '-') {
                        j += 1;
                    }
                }
            }
            toks.push((start, Tok::Str(value)));
            i = j;
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && at(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i + 1;
            while at(j).is_some_and(|c| c.is_ascii_digit())
                || (at(j) == Some('.') && at(j + 1).is_some_and(|d| d.is_ascii_digit()))
            {
                j += 1;
            }
            let n: String = chars[i..j].iter().map(|&(_, c)| c).collect();
            toks.push((start, Tok::Number(n)));
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i + 1;
            while at(j).is_some_and(is_name_char) {
                j += 1;
            }
            let word: String = chars[i..j].iter().map(|&(_, c)| c).collect();
            if at(j) == Some(':') {
                let mut k = j + 1;
                while at(k).is_some_and(|c| is_name_char(c) || c == '-') {
                    k += 1;
                }
                let local: String = chars[j + 1..k].iter().map(|&(_, c)| c).collect();
                toks.push((start, Tok::PName(word, local)));
                i = k;
            } else {
                toks.push((start, Tok::Word(word)));
                i = j;
            }
            continue;
        }
        toks.push((start, Tok::Punct(c)));
        i += 1;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
}

const FORBIDDEN: [&str; 14] = [
    "OPTIONAL",
    "FILTER",
    "UNION",
    "MINUS",
    "BIND",
    "VALUES",
    "SELECT",
    "GRAPH",
    "ORDER",
    "GROUP",
    "HAVING",
    "OFFSET",
    "FROM",
    "CONSTRUCT",
];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|&(p, _)| p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(_, t)| t.clone());
        self.idx += 1;
        t
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        let p = self.pos();
        match self.next() {
            Some(Tok::Punct(x)) if x == c => Ok(()),
            Some(t) => Err(err(p, format!("expected '{c}', found {}", t.describe()))),
            None => Err(err(p, format!("expected '{c}', found end of input"))),
        }
    }

    fn unsupported(&self, what: &str) -> ParseError {
        err(self.pos(), format!("unsupported construct: {what}"))
    }

    fn check_forbidden(&self) -> Result<(), ParseError> {
        if let Some(Tok::Word(w)) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if FORBIDDEN.contains(&upper.as_str()) {
                return Err(self.unsupported(&upper));
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        while self.peek().is_some_and(|t| t.is_word("PREFIX")) {
            self.next();
            let p = self.pos();
            match self.next() {
                Some(Tok::PName(prefix, local)) if local.is_empty() => {
                    if !KNOWN_PREFIXES.contains(&prefix.as_str()) {
                        return Err(err(p, format!("unsupported prefix {prefix}:")));
                    }
                }
                other => {
                    return Err(err(
                        p,
                        format!(
                            "expected prefix name, found {}",
                            other.map(|t| t.describe()).unwrap_or_else(|| "end of input".into())
                        ),
                    ))
                }
            }
            let p = self.pos();
            if !matches!(self.next(), Some(Tok::Iri(_))) {
                return Err(err(p, "expected IRI after prefix name"));
            }
        }

        if !self.peek().is_some_and(|t| t.is_word("SELECT")) {
            self.check_forbidden()?;
            return Err(err(self.pos(), "expected SELECT"));
        }
        self.next();
        let mut distinct = false;
        if self.peek().is_some_and(|t| t.is_word("DISTINCT")) {
            self.next();
            distinct = true;
        }

        let mut projected: Vec<(usize, String)> = Vec::new();
        while let Some(Tok::Var(v)) = self.peek() {
            let v = v.clone();
            let p = self.pos();
            if projected.iter().any(|(_, x)| *x == v) {
                return Err(err(p, format!("variable ?{v} projected twice")));
            }
            projected.push((p, v));
            self.next();
        }
        if projected.is_empty() {
            return match self.peek() {
                Some(Tok::Punct('*')) => Err(self.unsupported("SELECT *")),
                Some(Tok::Punct('(')) => Err(self.unsupported("projection expression")),
                _ => Err(err(self.pos(), "expected at least one projected variable")),
            };
        }
        if matches!(self.peek(), Some(Tok::Punct('('))) {
            return Err(self.unsupported("projection expression"));
        }

        if self.peek().is_some_and(|t| t.is_word("WHERE")) {
            self.next();
        } else {
            self.check_forbidden()?;
        }
        let open = self.pos();
        self.expect_punct('{')?;
        let (patterns, label_service) = self.group()?;
        if patterns.is_empty() {
            return Err(err(open, "empty graph pattern"));
        }

        let mut limit = None;
        if self.peek().is_some_and(|t| t.is_word("LIMIT")) {
            self.next();
            let p = self.pos();
            match self.next() {
                Some(Tok::Number(n)) => {
                    limit = Some(
                        n.parse::<u64>()
                            .map_err(|_| err(p, "LIMIT expects a non-negative integer"))?,
                    )
                }
                _ => return Err(err(p, "LIMIT expects a non-negative integer")),
            }
        }
        if self.peek().is_some() {
            self.check_forbidden()?;
            let p = self.pos();
            let t = self.next().map(|t| t.describe()).unwrap_or_default();
            return Err(err(p, format!("unexpected trailing {t}")));
        }

        let mut query = Query {
            distinct,
            projected: Vec::new(),
            patterns,
            label_service,
            limit,
        };
        for (p, v) in &projected {
            if !query.uses_var(v) && query.label_stem(v).is_none() {
                return Err(err(
                    *p,
                    format!("projected variable ?{v} does not occur in the pattern"),
                ));
            }
        }
        query.projected = projected.into_iter().map(|(_, v)| v).collect();
        Ok(query)
    }

    /// Parses the body of `WHERE { ... }` up to and including the closing brace.
    fn group(&mut self) -> Result<(Vec<TriplePattern>, bool), ParseError> {
        let mut patterns = Vec::new();
        let mut label_service = false;
        loop {
            match self.peek() {
                None => return Err(err(self.pos(), "unterminated graph pattern")),
                Some(Tok::Punct('}')) => {
                    self.next();
                    return Ok((patterns, label_service));
                }
                Some(Tok::Punct('{')) => return Err(self.unsupported("nested group")),
                Some(Tok::Punct('.')) => {
                    self.next();
                }
                Some(t) if t.is_word("SERVICE") => {
                    if label_service {
                        return Err(err(self.pos(), "more than one SERVICE clause"));
                    }
                    self.next();
                    let p = self.pos();
                    match self.next() {
                        Some(Tok::PName(pre, local)) if pre == "wikibase" && local == "label" => {}
                        _ => return Err(err(p, "unsupported construct: only SERVICE wikibase:label is allowed")),
                    }
                    self.expect_punct('{')?;
                    loop {
                        let p = self.pos();
                        match self.next() {
                            None => return Err(err(p, "unterminated SERVICE block")),
                            Some(Tok::Punct('}')) => break,
                            Some(Tok::Punct('{')) => {
                                return Err(err(p, "unsupported construct: nested group in SERVICE"))
                            }
                            Some(_) => {}
                        }
                    }
                    label_service = true;
                }
                Some(Tok::Word(_)) => {
                    self.check_forbidden()?;
                    self.triples_same_subject(&mut patterns)?;
                }
                Some(_) => self.triples_same_subject(&mut patterns)?,
            }
        }
    }

    fn triples_same_subject(&mut self, out: &mut Vec<TriplePattern>) -> Result<(), ParseError> {
        let subject = self.term()?;
        match &subject.1 {
            PatternTerm::Var(_) | PatternTerm::Entity(_) => {}
            PatternTerm::Literal(_) => return Err(err(subject.0, "literal in subject position")),
            PatternTerm::Predicate(_) => return Err(err(subject.0, "property IRI in subject position")),
        }
        loop {
            let predicate = self.term()?;
            if let Some(Tok::Punct(c @ ('/' | '|' | '*' | '+' | '^'))) = self.peek() {
                let c = *c;
                return Err(self.unsupported(&format!("property path '{c}'")));
            }
            match &predicate.1 {
                PatternTerm::Var(_) | PatternTerm::Predicate(_) => {}
                _ => return Err(err(predicate.0, "predicate must be a variable or wdt: property")),
            }
            loop {
                let object = self.term()?;
                if let PatternTerm::Predicate(_) = object.1 {
                    return Err(err(object.0, "property IRI in object position"));
                }
                out.push(TriplePattern::new(subject.1.clone(), predicate.1.clone(), object.1));
                if matches!(self.peek(), Some(Tok::Punct(','))) {
                    self.next();
                    continue;
                }
                break;
            }
            if matches!(self.peek(), Some(Tok::Punct(';'))) {
                self.next();
                if matches!(self.peek(), Some(Tok::Punct('.') | Tok::Punct('}'))) {
                    break;
                }
                continue;
            }
            break;
        }
        match self.peek() {
            Some(Tok::Punct('.')) => {
                self.next();
                Ok(())
            }
            Some(Tok::Punct('}')) => Ok(()),
            Some(Tok::Punct(c @ ('/' | '|' | '*' | '+' | '^'))) => {
                let c = *c;
                Err(self.unsupported(&format!("property path '{c}'")))
            }
            Some(t) => Err(err(self.pos(), format!("expected '.' or '}}', found {}", t.describe()))),
            None => Err(err(self.pos(), "unterminated graph pattern")),
        }
    }

    fn term(&mut self) -> Result<(usize, PatternTerm), ParseError> {
        let p = self.pos();
        let t = self.next().ok_or_else(|| err(p, "unexpected end of input"))?;
        let term = match t {
            Tok::Var(v) => PatternTerm::Var(v),
            Tok::PName(prefix, local) => match prefix.as_str() {
                "wd" => PatternTerm::Entity(local.parse().map_err(|e| err(p, format!("{e}")))?),
                "wdt" => PatternTerm::Predicate(local.parse().map_err(|e| err(p, format!("{e}")))?),
                _ => return Err(err(p, format!("unsupported construct: {prefix}:{local}"))),
            },
            Tok::Iri(iri) => {
                if let Some(id) = iri.strip_prefix(ENTITY_IRI) {
                    PatternTerm::Entity(id.parse().map_err(|e| err(p, format!("{e}")))?)
                } else if let Some(id) = iri.strip_prefix(DIRECT_IRI) {
                    PatternTerm::Predicate(id.parse().map_err(|e| err(p, format!("{e}")))?)
                } else {
                    return Err(err(p, format!("unsupported IRI <{iri}>")));
                }
            }
            Tok::Str(s) => PatternTerm::Literal(s),
            Tok::Number(n) => PatternTerm::Literal(n),
            Tok::Word(w) => {
                let upper = w.to_ascii_uppercase();
                if FORBIDDEN.contains(&upper.as_str()) {
                    return Err(err(p, format!("unsupported construct: {upper}")));
                }
                if w == "a" {
                    return Err(err(p, "unsupported construct: 'a' (rdf:type)"));
                }
                return Err(err(p, format!("unexpected {w}")));
            }
            Tok::Punct('[') => return Err(err(p, "unsupported construct: blank node")),
            Tok::Punct('(') => return Err(err(p, "unsupported construct: collection or expression")),
            Tok::Punct(c) => return Err(err(p, format!("unexpected '{c}'"))),
        };
        Ok((p, term))
    }
}

/// Parses a query in the restricted dialect.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks,
        idx: 0,
        end: text.len(),
    };
    parser.query()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{EntityId, PropertyId};

    fn q(n: u64) -> PatternTerm {
        PatternTerm::Entity(EntityId::new(n))
    }
    fn p(n: u64) -> PatternTerm {
        PatternTerm::Predicate(PropertyId::new(n))
    }
    fn v(s: &str) -> PatternTerm {
        PatternTerm::Var(s.into())
    }

    #[test]
    fn schleyer_query() {
        let query = parse(
            r#"SELECT ?x WHERE { ?x wdt:P1411 wd:Q35637 . ?a wdt:P112 ?x . SERVICE wikibase:label { bd:serviceParam wikibase:language "en". } }"#,
        )
        .unwrap();
        assert_eq!(query.projected, vec!["x"]);
        assert!(query.label_service);
        assert!(!query.distinct);
        assert_eq!(
            query.patterns,
            vec![
                TriplePattern::new(v("x"), p(1411), q(35637)),
                TriplePattern::new(v("a"), p(112), v("x")),
            ]
        );
    }

    #[test]
    fn optional_is_rejected_at_its_position() {
        let text = "SELECT ?x WHERE { OPTIONAL { ?x wdt:P31 wd:Q5 } }";
        let e = parse(text).unwrap_err();
        assert_eq!(e.position, text.find("OPTIONAL").unwrap());
        assert!(e.message.contains("OPTIONAL"));
    }

    #[test]
    fn empty_block_is_rejected() {
        let e = parse("SELECT ?x WHERE { }").unwrap_err();
        assert!(e.message.contains("empty"), "{e}");
    }

    #[test]
    fn forbidden_constructs() {
        for text in [
            "SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . FILTER(?x != wd:Q1) }",
            "SELECT ?x WHERE { { ?x wdt:P31 wd:Q5 } UNION { ?x wdt:P31 wd:Q6 } }",
            "SELECT ?x WHERE { ?x wdt:P31/wdt:P279* wd:Q5 . }",
            "SELECT ?x WHERE { { SELECT ?x WHERE { ?x wdt:P31 wd:Q5 } } }",
            "SELECT * WHERE { ?x wdt:P31 wd:Q5 . }",
            "SELECT ?x WHERE { ?x a wd:Q5 . }",
            "SELECT ?x WHERE { ?x rdfs:label \"x\" . }",
            "SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . } ORDER BY ?x",
            "SELECT (COUNT(?x) AS ?n) WHERE { ?x wdt:P31 wd:Q5 . }",
            "SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . SERVICE <http://example.org/> { } }",
            "SELECT ?y WHERE { ?x wdt:P31 wd:Q5 . }",
            "SELECT ?x WHERE { \"lit\" wdt:P31 ?x . }",
            "SELECT ?x WHERE { ?x wd:Q31 wd:Q5 . }",
            "PREFIX ex: <http://example.org/> SELECT ?x WHERE { ?x wdt:P31 wd:Q5 . }",
        ] {
            assert!(parse(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn prefixes_distinct_limit_and_abbreviations() {
        let query = parse(
            "PREFIX wd: <http://www.wikidata.org/entity/>\nPREFIX wdt: <http://www.wikidata.org/prop/direct/>\n\
             select distinct ?x ?y where { ?x wdt:P31 wd:Q5 ; wdt:P27 ?y , wd:Q30 . } limit 10",
        )
        .unwrap();
        assert!(query.distinct);
        assert_eq!(query.limit, Some(10));
        assert_eq!(query.patterns.len(), 3);
        assert_eq!(query.patterns[2], TriplePattern::new(v("x"), p(27), q(30)));
    }

    #[test]
    fn full_iris_and_literals() {
        let query = parse(
            "SELECT ?x WHERE { ?x <http://www.wikidata.org/prop/direct/P571> \"1990\"^^xsd:dateTime . ?x wdt:P1 'a b'@en . ?x wdt:P2 42 . }",
        )
        .unwrap();
        assert_eq!(query.patterns[0].predicate, p(571));
        assert_eq!(query.patterns[0].object, PatternTerm::Literal("1990".into()));
        assert_eq!(query.patterns[1].object, PatternTerm::Literal("a b".into()));
        assert_eq!(query.patterns[2].object, PatternTerm::Literal("42".into()));
    }

    #[test]
    fn display_reparses_to_same_query() {
        let text = r#"SELECT DISTINCT ?x ?xLabel WHERE { ?x wdt:P1411 wd:Q35637 ; wdt:P19 "Ober \"lauda\"" . SERVICE wikibase:label { bd:serviceParam wikibase:language "[AUTO_LANGUAGE],en". } } LIMIT 5"#;
        let a = parse(text).unwrap();
        let b = parse(&a.to_string()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn comments_are_skipped() {
        let query = parse("# find things\nSELECT ?x WHERE { ?x wdt:P31 wd:Q5 . # trailing\n }").unwrap();
        assert_eq!(query.patterns.len(), 1);
    }
}
