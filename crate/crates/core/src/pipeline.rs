//! Per-seed generation: sample a local subgraph, let the generator decide
//! whether it supports a question or which entities to expand, and assemble
//! a candidate instance once it does.

use std::collections::{BTreeMap, HashSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{InstanceRecord, RecordMeta, SeedRef, EPOCH};
use crate::kg::{split_surface, Direction, EntityId, EntityRef, PropertyId, Term, Triple, TripleKey};
use crate::llm::{
    parse_generation_response, render_generator_prompt, ChatProvider, ChatRequest, FormatError, GenerationOutcome,
    LlmError,
};
use crate::sparql::{BackendError, KgBackend, PatternTerm, Query, TriplePattern};
use crate::verifier::{canonicalize_answer, normalize_label, AnswerKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub init_k: usize,
    pub expand_k: usize,
    pub max_iterations: u32,
    pub max_subgraph_triples: usize,
    pub rng_seed: u64,
    pub generator_model: String,
    pub direction: Direction,
    /// Write the epoch instead of the wall clock into `created_at`.
    pub zero_timestamps: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            init_k: 15,
            expand_k: 12,
            max_iterations: 5,
            max_subgraph_triples: 200,
            rng_seed: 0,
            generator_model: "gpt-4.1".into(),
            direction: Direction::Both,
            zero_timestamps: false,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [
            ("init_k", self.init_k),
            ("expand_k", self.expand_k),
            ("max_iterations", self.max_iterations as usize),
            ("max_subgraph_triples", self.max_subgraph_triples),
        ] {
            if v == 0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        if self.generator_model.trim().is_empty() {
            return Err("generator_model is empty".into());
        }
        Ok(())
    }
}

/// The growing local graph around one seed. Triples keep insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub seed: EntityRef,
    triples: Vec<Triple>,
    keys: HashSet<TripleKey>,
    pub iteration: u32,
    pub finalized: bool,
}

impl Subgraph {
    pub fn new(seed: EntityRef) -> Self {
        Subgraph {
            seed,
            triples: Vec::new(),
            keys: HashSet::new(),
            iteration: 0,
            finalized: false,
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Adds `t` unless an equal fact is present; returns whether it was new.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.keys.insert(t.key()) {
            self.triples.push(t);
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbandonReason {
    SeedExhausted,
    IterationLimit,
    StepFailed,
    ProofResolutionFailed,
    Infrastructure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abandoned {
    pub seed: SeedRef,
    pub reason: AbandonReason,
    pub iterations: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateMeta {
    pub iterations: u32,
    pub model: String,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateInstance {
    pub id: String,
    pub seed: EntityRef,
    pub question: String,
    pub answers: Vec<String>,
    pub proof: Vec<Triple>,
    /// Empty when no query could be synthesized from the proof.
    pub sparql: String,
    pub subgraph: Subgraph,
    pub meta: CandidateMeta,
}

impl CandidateInstance {
    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            id: self.id.clone(),
            seed: SeedRef {
                label: self.seed.label.clone(),
                qid: self.seed.qid,
            },
            question: self.question.clone(),
            answers: self.answers.clone(),
            proof: self.proof.iter().map(Triple::surface).collect(),
            sparql: self.sparql.clone(),
            meta: RecordMeta {
                iterations: self.meta.iterations,
                validation_attempts: None,
                model: self.meta.model.clone(),
                created_at: self.meta.created_at.clone(),
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error("generator output unusable after a re-ask: {0}")]
    Failed(FormatError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot synthesize a query: {0}")]
pub struct SynthesisError(pub String);

pub fn init_subgraph(
    backend: &dyn KgBackend,
    seed: &EntityRef,
    cfg: &PipelineConfig,
    rng: &mut dyn RngCore,
) -> Result<Subgraph, Abandoned> {
    let triples = backend
        .one_hop(seed.qid, cfg.init_k, cfg.direction, rng)
        .map_err(|e| abandon(seed, AbandonReason::Infrastructure, 0, e.to_string()))?;
    if triples.is_empty() {
        return Err(abandon(
            seed,
            AbandonReason::SeedExhausted,
            0,
            "seed has no neighbours".into(),
        ));
    }
    let mut sg = Subgraph::new(seed.clone());
    for t in triples {
        sg.insert(t);
    }
    Ok(sg)
}

/// Unions `expand_k` sampled neighbours of every frontier entity into the
/// subgraph. Overflow beyond `max_subgraph_triples` is dropped newest-first.
pub fn expand(
    subgraph: &mut Subgraph,
    frontier: &[EntityId],
    backend: &dyn KgBackend,
    cfg: &PipelineConfig,
    rng: &mut dyn RngCore,
) -> Result<usize, BackendError> {
    assert!(!subgraph.finalized, "cannot expand a finalized subgraph");
    let mut added = 0;
    for &q in frontier {
        for t in backend.one_hop(q, cfg.expand_k, cfg.direction, rng)? {
            if subgraph.len() >= cfg.max_subgraph_triples {
                break;
            }
            if subgraph.insert(t) {
                added += 1;
            }
        }
    }
    subgraph.iteration += 1;
    Ok(added)
}

/// Asks the generator about the current subgraph, re-asking once on
/// malformed output.
pub fn step(subgraph: &Subgraph, llm: &dyn ChatProvider, model: &str) -> Result<GenerationOutcome, StepError> {
    let prompt =
        render_generator_prompt(subgraph.triples()).map_err(|e| StepError::Failed(FormatError(e.to_string())))?;
    let request = ChatRequest::user(model, prompt);
    let mut last = None;
    for _ in 0..2 {
        match parse_generation_response(&llm.complete(&request)?) {
            Ok(outcome) => return Ok(outcome),
            Err(e) => {
                log::debug!("generator output rejected: {e}");
                last = Some(e);
            }
        }
    }
    Err(StepError::Failed(last.expect("two failed attempts")))
}

fn proof_matches(t: &Triple, s: EntityId, p: PropertyId, o: &(String, Option<String>), raw_o: &str) -> bool {
    if t.subject.qid != s || t.predicate.pid != p {
        return false;
    }
    match (&t.object, &o.1) {
        (Term::Entity(e), Some(id)) => e.qid.to_string() == *id,
        (Term::Literal { value, .. }, _) => value.trim() == raw_o.trim(),
        (Term::Entity(_), None) => false,
    }
}

/// Maps proof surface strings onto subgraph triples by id (labels may drift).
pub fn resolve_proof(proof: &[[String; 3]], subgraph: &Subgraph) -> Result<Vec<Triple>, String> {
    proof
        .iter()
        .map(|[s, p, o]| {
            let sid: EntityId = split_surface(s)
                .1
                .and_then(|id| id.parse().ok())
                .ok_or_else(|| format!("proof subject {s:?} carries no Q-id"))?;
            let pid: PropertyId = split_surface(p)
                .1
                .and_then(|id| id.parse().ok())
                .ok_or_else(|| format!("proof predicate {p:?} carries no P-id"))?;
            let obj = split_surface(o);
            subgraph
                .triples()
                .iter()
                .find(|t| proof_matches(t, sid, pid, &obj, o))
                .cloned()
                .ok_or_else(|| format!("proof triple [{s}, {p}, {o}] is not in the subgraph"))
        })
        .collect()
}

/// Builds a query from the proof by turning every answer occurrence into a
/// projected variable (`?ans`, or `?ans1..N` for several answers).
pub fn synthesize_query(proof: &[Triple], answers: &[AnswerKey]) -> Result<Query, SynthesisError> {
    if proof.is_empty() {
        return Err(SynthesisError("empty proof".into()));
    }
    let mut distinct: Vec<&AnswerKey> = Vec::new();
    for a in answers {
        if !distinct.contains(&a) {
            distinct.push(a);
        }
    }
    if distinct.is_empty() {
        return Err(SynthesisError("no answers".into()));
    }
    let names: Vec<String> = if distinct.len() == 1 {
        vec!["ans".into()]
    } else {
        (1..=distinct.len()).map(|i| format!("ans{i}")).collect()
    };
    let var_for_entity = |q: EntityId| {
        distinct
            .iter()
            .position(|a| a.qid == Some(q))
            .map(|i| PatternTerm::Var(names[i].clone()))
    };
    let var_for_literal = |v: &str| {
        let v = normalize_label(v);
        distinct
            .iter()
            .position(|a| a.qid.is_none() && a.normalized_label == v)
            .map(|i| PatternTerm::Var(names[i].clone()))
    };

    let patterns: Vec<TriplePattern> = proof
        .iter()
        .map(|t| {
            let subject = var_for_entity(t.subject.qid).unwrap_or(PatternTerm::Entity(t.subject.qid));
            let object = match &t.object {
                Term::Entity(e) => var_for_entity(e.qid).unwrap_or(PatternTerm::Entity(e.qid)),
                Term::Literal { value, .. } => {
                    var_for_literal(value).unwrap_or_else(|| PatternTerm::Literal(value.clone()))
                }
            };
            TriplePattern::new(subject, PatternTerm::Predicate(t.predicate.pid), object)
        })
        .collect();
    let query = Query {
        distinct: false,
        projected: names,
        patterns,
        label_service: true,
        limit: None,
    };
    if let Some((i, a)) = query.projected.iter().zip(&distinct).find(|(v, _)| !query.uses_var(v)) {
        let what = a
            .qid
            .map(|q| q.to_string())
            .unwrap_or_else(|| a.normalized_label.clone());
        return Err(SynthesisError(format!(
            "answer {what} (?{i}) does not occur in the proof"
        )));
    }
    Ok(query)
}

pub fn synthesize_sparql(proof: &[Triple], answers: &[AnswerKey]) -> Result<String, SynthesisError> {
    synthesize_query(proof, answers).map(|q| q.to_string())
}

/// First 16 hex digits of sha256 over seed, question and sorted answer keys.
pub fn instance_id(seed: EntityId, question: &str, answers: &[AnswerKey]) -> String {
    let mut keys: Vec<String> = answers
        .iter()
        .map(|a| {
            a.qid
                .map(|q| q.to_string())
                .unwrap_or_else(|| a.normalized_label.clone())
        })
        .collect();
    keys.sort();
    keys.dedup();
    let mut h = Sha256::new();
    h.update(seed.to_string().as_bytes());
    h.update([0]);
    h.update(question.as_bytes());
    for k in keys {
        h.update([0]);
        h.update(k.as_bytes());
    }
    hex::encode(h.finalize())[..16].to_string()
}

fn abandon(seed: &EntityRef, reason: AbandonReason, iterations: u32, detail: String) -> Abandoned {
    Abandoned {
        seed: SeedRef {
            label: seed.label.clone(),
            qid: seed.qid,
        },
        reason,
        iterations,
        detail,
    }
}

fn now(cfg: &PipelineConfig) -> String {
    if cfg.zero_timestamps {
        EPOCH.to_string()
    } else {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    }
}

fn assemble(
    mut sg: Subgraph,
    question: String,
    answers: Vec<String>,
    proof: &[[String; 3]],
    cfg: &PipelineConfig,
) -> Result<CandidateInstance, Abandoned> {
    let fail =
        |sg: &Subgraph, detail: String| abandon(&sg.seed, AbandonReason::ProofResolutionFailed, sg.iteration, detail);
    let proof = resolve_proof(proof, &sg).map_err(|d| fail(&sg, d))?;
    let keys: Vec<AnswerKey> = answers.iter().map(|a| canonicalize_answer(a)).collect();
    // Entity answers must be grounded in the proof; literal answers that
    // cannot be located are left for the reviser.
    if let Some(q) = keys
        .iter()
        .filter_map(|k| k.qid)
        .find(|q| !proof.iter().any(|t| t.touches(*q)))
    {
        return Err(fail(&sg, format!("answer {q} does not occur in the proof")));
    }
    let sparql = match synthesize_sparql(&proof, &keys) {
        Ok(s) => s,
        Err(e) => {
            log::info!("seed {}: {e}; deferring to revision", sg.seed.qid);
            String::new()
        }
    };
    sg.finalized = true;
    Ok(CandidateInstance {
        id: instance_id(sg.seed.qid, &question, &keys),
        seed: sg.seed.clone(),
        question,
        answers,
        proof,
        sparql,
        meta: CandidateMeta {
            iterations: sg.iteration,
            model: cfg.generator_model.clone(),
            created_at: now(cfg),
        },
        subgraph: sg,
    })
}

/// Runs the full expand/judge loop for one seed.
pub fn generate_instance(
    backend: &dyn KgBackend,
    llm: &dyn ChatProvider,
    seed: &EntityRef,
    cfg: &PipelineConfig,
    rng: &mut dyn RngCore,
) -> Result<CandidateInstance, Abandoned> {
    let mut sg = init_subgraph(backend, seed, cfg, rng)?;
    let mut expanded: HashSet<EntityId> = HashSet::from([seed.qid]);
    loop {
        let outcome = step(&sg, llm, &cfg.generator_model).map_err(|e| {
            let reason = match e {
                StepError::Failed(_) => AbandonReason::StepFailed,
                StepError::Llm(_) => AbandonReason::Infrastructure,
            };
            abandon(seed, reason, sg.iteration, e.to_string())
        })?;
        match outcome {
            GenerationOutcome::Sufficient {
                question,
                answers,
                proof,
            } => return assemble(sg, question, answers, &proof, cfg),
            GenerationOutcome::Insufficient { candidates } => {
                if sg.iteration >= cfg.max_iterations {
                    return Err(abandon(
                        seed,
                        AbandonReason::IterationLimit,
                        sg.iteration,
                        format!("still insufficient after {} expansions", sg.iteration),
                    ));
                }
                let mut frontier = Vec::new();
                for c in candidates {
                    if expanded.insert(c) {
                        frontier.push(c);
                    }
                }
                if frontier.is_empty() {
                    return Err(abandon(
                        seed,
                        AbandonReason::IterationLimit,
                        sg.iteration,
                        "every proposed entity was already expanded".into(),
                    ));
                }
                log::debug!("seed {}: expanding {} entities", seed.qid, frontier.len());
                expand(&mut sg, &frontier, backend, cfg, rng)
                    .map_err(|e| abandon(seed, AbandonReason::Infrastructure, sg.iteration, e.to_string()))?;
            }
        }
    }
}

/// Deterministic per-seed generator, independent of scheduling order.
pub fn seed_rng(rng_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(rng_seed ^ index as u64)
}

/// Processes `seeds` on a pool of `workers` threads; results keep seed order.
pub fn run_batch(
    backend: &dyn KgBackend,
    llm: &dyn ChatProvider,
    seeds: &[EntityRef],
    cfg: &PipelineConfig,
    workers: usize,
) -> Vec<Result<CandidateInstance, Abandoned>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, seed)| {
                let result = generate_instance(backend, llm, seed, cfg, &mut seed_rng(cfg.rng_seed, i));
                match &result {
                    Ok(c) => log::info!(
                        "seed {}: candidate {} after {} expansions",
                        seed.qid,
                        c.id,
                        c.meta.iterations
                    ),
                    Err(a) => log::info!("seed {}: abandoned ({:?}): {}", seed.qid, a.reason, a.detail),
                }
                result
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("seeds line {line}: {message}")]
pub struct SeedError {
    pub line: usize,
    pub message: String,
}

/// One seed per line: `Q-id`, optionally followed by a tab and a label.
pub fn parse_seeds(text: &str) -> Result<Vec<EntityRef>, SeedError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (id, label) = line.split_once('\t').unwrap_or((line, ""));
        let qid: EntityId = id.trim().parse().map_err(|e: crate::kg::IdError| SeedError {
            line: i + 1,
            message: e.to_string(),
        })?;
        if seen.insert(qid, i + 1).is_some() {
            log::warn!("seeds line {}: duplicate seed {qid} ignored", i + 1);
            continue;
        }
        out.push(EntityRef::new(qid, label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{parse_tsv, TripleStore};
    use crate::llm::ScriptedProvider;

    const SCHLEYER_TSV: &str = "\
Johann Martin Schleyer\tQ12712\tnominated for\tP1411\tNobel Peace Prize\tQ35637
International Volapük Academy\tQ3358168\tfounded by\tP112\tJohann Martin Schleyer\tQ12712
Johann Martin Schleyer\tQ12712\tplace of birth\tP19\tOberlauda\tQ885402
Bertha von Suttner\tQ78506\taward received\tP166\tNobel Peace Prize\tQ35637
Nobel Peace Prize\tQ35637\tcountry\tP17\tNorway\tQ20
Nobel Peace Prize\tQ35637\tinstance of\tP31\tNobel Prize\tQ7191
Norway\tQ20\tcapital\tP36\tOslo\tQ585
Lonely\tQ999\tinception\tP571\t1990\tlit:date:1990
";

    const SCHLEYER_OUTPUT: &str = r#"{
  "sufficient": true,
  "question": "Who among the nominees for the Nobel Peace Prize was also the founder of International Volapük Academy?",
  "answer": ["Johann Martin Schleyer (Q12712)"],
  "proof": [
    ["Johann Martin Schleyer (Q12712)", "nominated for (P1411)", "Nobel Peace Prize (Q35637)"],
    ["International Volapük Academy (Q3358168)", "founded by (P112)", "Johann Martin Schleyer (Q12712)"]
  ]
}"#;

    fn store() -> TripleStore {
        parse_tsv(SCHLEYER_TSV).unwrap()
    }

    fn q(s: &str) -> EntityId {
        s.parse().unwrap()
    }

    fn seed(s: &str) -> EntityRef {
        EntityRef::new(q(s), "")
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn init_takes_all_when_k_exceeds_degree() {
        let sg = init_subgraph(&store(), &seed("Q35637"), &PipelineConfig::default(), &mut rng()).unwrap();
        assert_eq!(sg.len(), 4);
        assert!(sg.triples().iter().all(|t| t.touches(q("Q35637"))));
        let again = init_subgraph(&store(), &seed("Q35637"), &PipelineConfig::default(), &mut rng()).unwrap();
        assert_eq!(sg, again);
        let err = init_subgraph(&store(), &seed("Q424242"), &PipelineConfig::default(), &mut rng()).unwrap_err();
        assert_eq!(err.reason, AbandonReason::SeedExhausted);
    }

    #[test]
    fn expansion_grows_monotonically_and_is_idempotent() {
        let cfg = PipelineConfig::default();
        let mut sg = init_subgraph(&store(), &seed("Q12712"), &cfg, &mut rng()).unwrap();
        let before: Vec<Triple> = sg.triples().to_vec();
        let added = expand(&mut sg, &[q("Q35637"), q("Q424242")], &store(), &cfg, &mut rng()).unwrap();
        assert_eq!(sg.iteration, 1);
        assert_eq!(added, 3);
        assert_eq!(&sg.triples()[..before.len()], &before[..]);
        let added = expand(&mut sg, &[q("Q35637")], &store(), &cfg, &mut rng()).unwrap();
        assert_eq!((added, sg.iteration), (0, 2));
    }

    #[test]
    fn expansion_clips_newest() {
        let cfg = PipelineConfig {
            max_subgraph_triples: 4,
            ..Default::default()
        };
        let mut sg = init_subgraph(&store(), &seed("Q12712"), &cfg, &mut rng()).unwrap();
        expand(&mut sg, &[q("Q35637"), q("Q20")], &store(), &cfg, &mut rng()).unwrap();
        assert_eq!(sg.len(), 4);
        assert!(sg.triples()[..3].iter().all(|t| t.touches(q("Q12712"))));
    }

    #[test]
    fn synthesized_query_for_schleyer() {
        let sg = init_subgraph(&store(), &seed("Q12712"), &PipelineConfig::default(), &mut rng()).unwrap();
        let proof = resolve_proof(
            &[
                [
                    "Johann Martin Schleyer (Q12712)".into(),
                    "nominated for (P1411)".into(),
                    "Nobel Peace Prize (Q35637)".into(),
                ],
                [
                    "International Volapük Academy (Q3358168)".into(),
                    "founded by (P112)".into(),
                    "J. M. Schleyer (Q12712)".into(),
                ],
            ],
            &sg,
        )
        .unwrap();
        let sparql = synthesize_sparql(&proof, &[canonicalize_answer("Johann Martin Schleyer (Q12712)")]).unwrap();
        assert_eq!(
            sparql,
            "SELECT ?ans WHERE { ?ans wdt:P1411 wd:Q35637 . wd:Q3358168 wdt:P112 ?ans . \
             SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\" . } }"
        );
        let rs = store().execute(&sparql).unwrap();
        assert_eq!(rs.rows.len(), 1);
        assert_eq!(rs.rows[0]["ans"].qid, Some(q("Q12712")));
    }

    #[test]
    fn synthesis_edge_cases() {
        let t = store().triples()[0].clone();
        let obj = canonicalize_answer(&t.object.surface());
        let s = synthesize_sparql(std::slice::from_ref(&t), &[obj]).unwrap();
        assert!(s.starts_with(&format!(
            "SELECT ?ans WHERE {{ wd:{} wdt:{} ?ans . ",
            t.subject.qid, t.predicate.pid
        )));
        assert!(synthesize_sparql(std::slice::from_ref(&t), &[canonicalize_answer("Paris (Q90)")]).is_err());
        let lit = store()
            .triples()
            .iter()
            .find(|t| t.subject.qid == q("Q999"))
            .unwrap()
            .clone();
        let s = synthesize_sparql(&[lit], &[canonicalize_answer("1990")]).unwrap();
        assert!(s.contains("wd:Q999 wdt:P571 ?ans"));
    }

    #[test]
    fn multi_answer_variables() {
        let proof: Vec<Triple> = store()
            .triples()
            .iter()
            .filter(|t| t.object.qid() == Some(q("Q35637")))
            .cloned()
            .collect();
        let answers: Vec<AnswerKey> = proof
            .iter()
            .map(|t| canonicalize_answer(&t.subject.surface()))
            .collect();
        let query = synthesize_query(&proof, &answers).unwrap();
        assert_eq!(query.projected, ["ans1", "ans2"]);
    }

    #[test]
    fn proof_resolution_rejects_unknown_triples() {
        let sg = init_subgraph(&store(), &seed("Q12712"), &PipelineConfig::default(), &mut rng()).unwrap();
        let bad = [[
            "Johann Martin Schleyer (Q12712)".into(),
            "place of birth (P19)".into(),
            "Paris (Q90)".into(),
        ]];
        assert!(resolve_proof(&bad, &sg).is_err());
        let unlabeled = [[
            "Johann Martin Schleyer".into(),
            "place of birth (P19)".into(),
            "Oberlauda (Q885402)".into(),
        ]];
        assert!(resolve_proof(&unlabeled, &sg).is_err());
    }

    #[test]
    fn step_reasks_once() {
        let sg = init_subgraph(&store(), &seed("Q12712"), &PipelineConfig::default(), &mut rng()).unwrap();
        let llm = ScriptedProvider::queue(["garbage", SCHLEYER_OUTPUT]);
        assert!(matches!(
            step(&sg, &llm, "m").unwrap(),
            GenerationOutcome::Sufficient { .. }
        ));
        let llm = ScriptedProvider::queue(["garbage", "still garbage", SCHLEYER_OUTPUT]);
        assert!(matches!(step(&sg, &llm, "m"), Err(StepError::Failed(_))));
        assert_eq!(llm.calls(), 2);
    }

    #[test]
    fn end_to_end_after_one_expansion() {
        let insufficient = r#"{"sufficient": false, "candidate": ["Q35637"]}"#;
        let llm = ScriptedProvider::queue([insufficient, SCHLEYER_OUTPUT]);
        let cfg = PipelineConfig {
            zero_timestamps: true,
            ..Default::default()
        };
        let c = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap();
        assert_eq!(c.meta.iterations, 1);
        assert!(c.subgraph.finalized);
        assert!(c.proof.iter().all(|t| c.subgraph.triples().contains(t)));
        assert_eq!(c.id.len(), 16);
        let llm = ScriptedProvider::queue([insufficient, SCHLEYER_OUTPUT]);
        let again = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_record().meta.created_at, EPOCH);
    }

    #[test]
    fn abandonment_reasons() {
        let cfg = PipelineConfig {
            max_iterations: 2,
            ..Default::default()
        };
        let llm = ScriptedProvider::queue([
            r#"{"sufficient": false, "candidate": ["Q35637"]}"#,
            r#"{"sufficient": false, "candidate": ["Q20"]}"#,
            r#"{"sufficient": false, "candidate": ["Q585"]}"#,
        ]);
        let err = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap_err();
        assert_eq!((err.reason, err.iterations), (AbandonReason::IterationLimit, 2));

        let llm = ScriptedProvider::queue([r#"{"sufficient": false, "candidate": ["Q12712"]}"#]);
        let err = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap_err();
        assert_eq!((err.reason, err.iterations), (AbandonReason::IterationLimit, 0));

        let hallucinated = SCHLEYER_OUTPUT.replace("Q3358168", "Q3358169");
        let llm = ScriptedProvider::queue([hallucinated]);
        let err = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap_err();
        assert_eq!(err.reason, AbandonReason::ProofResolutionFailed);

        let llm = ScriptedProvider::queue(["x", "y"]);
        let err = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap_err();
        assert_eq!(err.reason, AbandonReason::StepFailed);

        let llm = ScriptedProvider::queue(Vec::<String>::new());
        let err = generate_instance(&store(), &llm, &seed("Q12712"), &cfg, &mut rng()).unwrap_err();
        assert_eq!(err.reason, AbandonReason::Infrastructure);
    }

    #[test]
    fn instance_id_ignores_answer_order() {
        let a = canonicalize_answer("A (Q1)");
        let b = canonicalize_answer("b");
        assert_eq!(
            instance_id(q("Q5"), "q?", &[a.clone(), b.clone()]),
            instance_id(q("Q5"), "q?", &[b, a.clone()])
        );
        assert_ne!(
            instance_id(q("Q5"), "q?", std::slice::from_ref(&a)),
            instance_id(q("Q6"), "q?", &[a])
        );
    }

    #[test]
    fn seeds_file() {
        let seeds = parse_seeds("# seeds\nQ12712\tJohann Martin Schleyer\nQ5\n\nQ12712\tdup\n").unwrap();
        assert_eq!(seeds.len(), 2);
        assert_eq!(seeds[0].label, "Johann Martin Schleyer");
        assert!(seeds[1].label_missing());
        assert_eq!(parse_seeds("Q1\nX9\n").unwrap_err().line, 2);
    }

    #[test]
    fn batch_is_order_independent() {
        let seeds = vec![seed("Q12712"), seed("Q424242"), seed("Q35637")];
        let cfg = PipelineConfig {
            zero_timestamps: true,
            max_iterations: 1,
            ..Default::default()
        };
        let run = |workers| {
            let llm = crate::llm::ScriptedProvider::new(vec![
                crate::llm::ScriptEntry {
                    matcher: crate::llm::Matcher::Contains("Oberlauda".into()),
                    response: SCHLEYER_OUTPUT.into(),
                },
                crate::llm::ScriptEntry {
                    matcher: crate::llm::Matcher::Contains("Bertha".into()),
                    response: r#"{"sufficient": false, "candidate": ["Q35637"]}"#.into(),
                },
            ]);
            run_batch(&store(), &llm, &seeds, &cfg, workers)
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert!(one[0].is_ok());
        assert_eq!(one[1].as_ref().unwrap_err().reason, AbandonReason::SeedExhausted);
        assert_eq!(one[2].as_ref().unwrap_err().reason, AbandonReason::IterationLimit);
    }
}
