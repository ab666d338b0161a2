//! Knowledge-graph grounded question answering benchmarks: generate
//! question/answer instances by LLM-guided subgraph expansion, verify them
//! by executing SPARQL against the graph, and score QA systems under exact
//! and LLM-assisted semantic matching.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod cli;
pub mod dataset;
pub mod evaluation;
pub mod http;
pub mod kg;
pub mod llm;
pub mod pipeline;
pub mod sparql;
pub mod verifier;
