//! Truth discovery over conflicting Linked Data objects.
//!
//! The pipeline: parse RDF ([`rdf`]), cluster co-referent subjects and build
//! the source belief graph ([`graph`]), rank sources by that graph
//! ([`prior`]), then alternate source trustworthiness and object trust values
//! with belief propagation over a per-conflict Markov random field
//! ([`engine`]). [`baselines`] and [`eval`] provide comparison methods and a
//! synthetic benchmark with known truth.

// `!(x > 0.0)` is how config validation rejects NaN along with non-positives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod engine;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod pipeline;
pub mod prior;
pub mod rdf;
pub mod report;
pub mod similarity;
