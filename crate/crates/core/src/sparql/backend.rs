use std::sync::Arc;

use rand::RngCore;

use super::{evaluate, parse, ParseError, ResultSet};
use crate::kg::{Direction, EntityId, Triple, TripleStore};

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed results document: {0}")]
    Malformed(String),
    #[error("query timed out on the endpoint")]
    QueryTimeout,
    #[error("backend misconfigured: {0}")]
    Config(String),
}

impl BackendError {
    /// True for failures of the service itself rather than of the query.
    pub fn is_infrastructure(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Config(_) | BackendError::Malformed(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500 || *status == 401 || *status == 403,
            BackendError::Parse(_) | BackendError::QueryTimeout => false,
        }
    }
}

/// The two calls the generator and verifier make against a knowledge graph.
pub trait KgBackend: Send + Sync {
    /// Uniform sample of at most `k` triples incident to `qid`.
    fn one_hop(
        &self,
        qid: EntityId,
        k: usize,
        direction: Direction,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Triple>, BackendError>;

    /// Runs a SPARQL query.
    fn execute(&self, query_text: &str) -> Result<ResultSet, BackendError>;
}

impl KgBackend for TripleStore {
    fn one_hop(
        &self,
        qid: EntityId,
        k: usize,
        direction: Direction,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Triple>, BackendError> {
        Ok(self.sample_one_hop(qid, k, direction, rng))
    }

    fn execute(&self, query_text: &str) -> Result<ResultSet, BackendError> {
        Ok(evaluate(&parse(query_text)?, self))
    }
}

impl<B: KgBackend + ?Sized> KgBackend for Arc<B> {
    fn one_hop(
        &self,
        qid: EntityId,
        k: usize,
        direction: Direction,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Triple>, BackendError> {
        (**self).one_hop(qid, k, direction, rng)
    }

    fn execute(&self, query_text: &str) -> Result<ResultSet, BackendError> {
        (**self).execute(query_text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::parse_tsv;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn in_memory_backend_samples_and_queries() {
        let store = parse_tsv(
            "Johann Martin Schleyer\tQ12712\tnominated for\tP1411\tNobel Peace Prize\tQ35637\n\
             Bertha von Suttner\tQ78506\taward received\tP166\tNobel Peace Prize\tQ35637\n\
             Nobel Peace Prize\tQ35637\tcountry\tP17\tNorway\tQ20\n\
             Norway\tQ20\tcapital\tP36\tOslo\tQ585\n",
        )
        .unwrap();
        let q: EntityId = "Q35637".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let got = store.one_hop(q, 10, Direction::Both, &mut rng).unwrap();
        assert_eq!(got.len(), 3);
        assert!(got.iter().all(|t| t.touches(q)));

        let err = store.execute("SELECT ?x WHERE { }").unwrap_err();
        assert!(matches!(err, BackendError::Parse(_)));
        assert!(!err.is_infrastructure());
    }
}
