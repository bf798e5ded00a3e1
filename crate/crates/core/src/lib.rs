//! Phenotype / rare-disease knowledge graph toolkit.
//!
//! Pipeline: parse ontology and annotation sources ([`ontology`]), build the
//! consolidated graph and information content ([`graph`]), embed nodes with
//! IC-biased random walks and skip-gram training ([`embedding`]), embed and
//! retrieve patient cases ([`retrieval`]), prompt a chat model
//! ([`llm`]) and score differential-diagnosis lists ([`eval`]).

pub mod config;
pub mod embedding;
pub mod eval;
pub mod graph;
pub mod llm;
pub mod ontology;
pub mod pipeline;
pub mod retrieval;
