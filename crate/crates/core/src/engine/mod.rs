//! Iterative truth computation.
//!
//! Source trustworthiness is the mean trust of the objects a source asserts,
//! smoothed by averaging with the source's normalized prior. Each object's
//! base trust is the mean smoothed trustworthiness of its supporters; belief
//! propagation over a similarity-coupled Markov field then turns base trust
//! into the object's trust value. The two updates alternate until object
//! trust stops moving.

mod bp;
mod field;
mod resolve;

use std::cmp::Ordering;

pub use bp::{loopy_bp, BpConfig, BpResult};
pub use field::{
    field_from_parts, pair_table, similarity_edges, FieldError, MarkovField, PairPotential,
    PairTable, TRUST_CLAMP,
};
pub use resolve::{
    build_field, object_base_trust, resolve_all, resolve_all_with, smooth_trustworthiness,
    source_trustworthiness, ConvergenceTrace, EngineConfig, EngineError, Resolution, TraceRow,
    ScoredObject, TruthDecision, TrustState,
};

use crate::rdf::ConflictObject;

/// Index of the winning object.
///
/// Highest score wins; ties go to the larger supporter count, then (when
/// `trust` is given) the larger summed supporter trust, then the smallest
/// value in canonical order.
pub fn select_truth(objects: &[ConflictObject], scores: &[f64], trust: Option<&[f64]>) -> usize {
    assert_eq!(objects.len(), scores.len());
    assert!(!objects.is_empty(), "cannot select from an empty conflict set");
    let support_trust = |i: usize| -> f64 {
        trust.map_or(0.0, |t| objects[i].sources.iter().map(|&s| t[s]).sum())
    };
    let better = |a: usize, b: usize| -> bool {
        scores[a]
            .total_cmp(&scores[b])
            .then(objects[a].sources.len().cmp(&objects[b].sources.len()))
            .then_with(|| support_trust(a).total_cmp(&support_trust(b)))
            .then_with(|| objects[b].value.cmp(&objects[a].value))
            == Ordering::Greater
    };
    (1..objects.len()).fold(0, |best, i| if better(i, best) { i } else { best })
}
