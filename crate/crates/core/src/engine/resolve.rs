use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bp::{loopy_bp, BpConfig};
use super::field::{field_from_parts, similarity_edges, MarkovField};
use super::select_truth;
use crate::exec::Execution;
use crate::graph::EntityClusterId;
use crate::prior::PriorBeliefs;
use crate::rdf::{ClaimStore, ConflictSet, NormalizedValue, PredicateId, SourceId};
use crate::similarity::SimilarityConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Stop once no object's trust moves by more than this in an iteration.
    pub outer_threshold: f64,
    pub outer_max: usize,
    pub bp_damping: f64,
    pub bp_tol: f64,
    pub bp_max: usize,
    /// Minimum similarity for two objects to share a pairwise potential.
    pub edge_threshold: f64,
    pub coupling: f64,
    /// Scale on the both-false potential; negative discourages similar
    /// objects from both being false.
    pub dissimilar_false: f64,
    /// Trustworthiness of every source before the first iteration.
    pub initial_trust: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            outer_threshold: 1e-3,
            outer_max: 20,
            bp_damping: 0.3,
            bp_tol: 1e-6,
            bp_max: 100,
            edge_threshold: 0.1,
            coupling: 1.0,
            dissimilar_false: -0.5,
            initial_trust: 0.5,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidConfig(msg));
        if !(self.outer_threshold > 0.0) {
            return bad(format!("outer_threshold {} must be > 0", self.outer_threshold));
        }
        if self.outer_max == 0 || self.bp_max == 0 {
            return bad("outer_max and bp_max must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.bp_damping) {
            return bad(format!("bp_damping {} not in [0, 1)", self.bp_damping));
        }
        if !(self.bp_tol > 0.0) {
            return bad(format!("bp_tol {} must be > 0", self.bp_tol));
        }
        if !(0.0..=1.0).contains(&self.edge_threshold) {
            return bad(format!("edge_threshold {} not in [0, 1]", self.edge_threshold));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return bad(format!("coupling {} must be finite and >= 0", self.coupling));
        }
        if !self.dissimilar_false.is_finite() {
            return bad("dissimilar_false must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.initial_trust) {
            return bad(format!("initial_trust {} not in [0, 1]", self.initial_trust));
        }
        Ok(())
    }

    pub fn bp(&self) -> BpConfig {
        BpConfig { damping: self.bp_damping, tolerance: self.bp_tol, max_rounds: self.bp_max }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
}

/// Per-source and per-object trust after the last completed iteration.
/// Source vectors are indexed like [`ClaimStore::sources`]; object vectors
/// like [`ClaimStore::conflict_sets`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrustState {
    pub sources: Vec<SourceId>,
    pub t: Vec<f64>,
    pub nbr: Vec<f64>,
    /// Always exactly `(nbr + t) / 2`.
    pub t_smoothed: Vec<f64>,
    pub tau: Vec<Vec<f64>>,
    /// Base trust implied by the current `t_smoothed`, i.e. the input to the
    /// next belief-propagation pass.
    pub tau_base: Vec<Vec<f64>>,
    pub iteration: usize,
}

impl TrustState {
    pub fn source(&self, id: &SourceId) -> Option<usize> {
        self.sources.binary_search(id).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub mean_delta_tau: f64,
    pub max_delta_tau: f64,
    /// Conflict sets whose belief propagation hit the round cap.
    pub bp_unconverged: usize,
    #[serde(skip)]
    pub t_smoothed: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `iteration,mean_delta_tau,max_delta_tau` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "iteration,mean_delta_tau,max_delta_tau")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.iteration, r.mean_delta_tau, r.max_delta_tau)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredObject {
    pub value: NormalizedValue,
    pub tau: f64,
    pub sources: Vec<SourceId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthDecision {
    pub entity: EntityClusterId,
    pub predicate: PredicateId,
    pub chosen: NormalizedValue,
    pub chosen_index: usize,
    pub objects: Vec<ScoredObject>,
}

impl TruthDecision {
    pub fn support(&self) -> &[SourceId] {
        &self.objects[self.chosen_index].sources
    }

    pub fn tau(&self) -> Vec<f64> {
        self.objects.iter().map(|o| o.tau).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub decisions: Vec<TruthDecision>,
    pub state: TrustState,
    pub trace: ConvergenceTrace,
    pub converged: bool,
}

impl Resolution {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Mean object trust over each source's conflict-set claims. Sources with no
/// such claims get `initial_trust`.
pub fn source_trustworthiness(store: &ClaimStore, tau: &[Vec<f64>], initial_trust: f64) -> Vec<f64> {
    source_trustworthiness_with(store, tau, initial_trust, Execution::Sequential)
}

fn source_trustworthiness_with(
    store: &ClaimStore,
    tau: &[Vec<f64>],
    initial_trust: f64,
    exec: Execution,
) -> Vec<f64> {
    exec.map_range(store.sources().len(), |s| {
        let (sum, n) = store
            .conflict_claims_of(s)
            .fold((0.0, 0usize), |(sum, n), (set, obj)| (sum + tau[set][obj], n + 1));
        if n == 0 {
            initial_trust
        } else {
            sum / n as f64
        }
    })
}

pub fn smooth_trustworthiness(t: &[f64], nbr: &[f64]) -> Vec<f64> {
    t.iter().zip(nbr).map(|(t, n)| (n + t) / 2.0).collect()
}

/// Mean smoothed trustworthiness of each object's supporters.
pub fn object_base_trust(set: &ConflictSet, t_smoothed: &[f64]) -> Vec<f64> {
    set.objects
        .iter()
        .map(|o| o.sources.iter().map(|&s| t_smoothed[s]).sum::<f64>() / o.sources.len() as f64)
        .collect()
}

pub fn build_field(
    set: &ConflictSet,
    base_trust: &[f64],
    sim_cfg: &SimilarityConfig,
    cfg: &EngineConfig,
) -> MarkovField {
    let values: Vec<&NormalizedValue> = set.values().collect();
    let sims = similarity_edges(&values, sim_cfg, cfg.edge_threshold);
    field_from_parts(base_trust, &sims, cfg.coupling, cfg.dissimilar_false)
}

pub fn resolve_all(
    store: &ClaimStore,
    priors: &PriorBeliefs,
    sim_cfg: &SimilarityConfig,
    cfg: &EngineConfig,
) -> Result<Resolution, EngineError> {
    resolve_all_with(store, priors, sim_cfg, cfg, Execution::default())
}

/// Alternates object trust (base trust, then belief propagation per conflict
/// set) and source trust until the largest object-trust change drops below
/// `outer_threshold` or `outer_max` iterations have run.
///
/// Object trust before the first iteration is taken to be the base trust
/// implied by the initial source trust, so the first trace row measures how
/// far belief propagation moves it.
pub fn resolve_all_with(
    store: &ClaimStore,
    priors: &PriorBeliefs,
    sim_cfg: &SimilarityConfig,
    cfg: &EngineConfig,
    exec: Execution,
) -> Result<Resolution, EngineError> {
    cfg.validate()?;
    sim_cfg.validate().map_err(EngineError::InvalidConfig)?;
    let sets = store.conflict_sets();
    let bp_cfg = cfg.bp();

    let sims: Vec<Vec<(usize, usize, f64)>> = exec.map(sets, |set| {
        let values: Vec<&NormalizedValue> = set.values().collect();
        similarity_edges(&values, sim_cfg, cfg.edge_threshold)
    });

    let nbr: Vec<f64> = store.sources().iter().map(|s| priors.nbr_of(s)).collect();
    let mut t = vec![cfg.initial_trust; nbr.len()];
    let mut t_smoothed = smooth_trustworthiness(&t, &nbr);
    let mut tau: Vec<Vec<f64>> = sets.iter().map(|s| object_base_trust(s, &t_smoothed)).collect();
    let n_objects: usize = sets.iter().map(ConflictSet::len).sum();

    let mut trace = ConvergenceTrace::default();
    let mut converged = false;
    for iteration in 1..=cfg.outer_max {
        let passes = exec.map_range(sets.len(), |k| {
            let base = object_base_trust(&sets[k], &t_smoothed);
            let field = field_from_parts(&base, &sims[k], cfg.coupling, cfg.dissimilar_false);
            let r = loopy_bp(&field, &bp_cfg);
            (r.marginals(), r.converged)
        });

        let mut sum_delta = 0.0;
        let mut max_delta = 0.0f64;
        let mut bp_unconverged = 0;
        let mut next_tau = Vec::with_capacity(passes.len());
        for ((marginals, ok), old) in passes.into_iter().zip(&tau) {
            for (new, old) in marginals.iter().zip(old) {
                let d = (new - old).abs();
                sum_delta += d;
                max_delta = max_delta.max(d);
            }
            bp_unconverged += (!ok) as usize;
            next_tau.push(marginals);
        }
        tau = next_tau;

        t = source_trustworthiness_with(store, &tau, cfg.initial_trust, exec);
        t_smoothed = smooth_trustworthiness(&t, &nbr);

        trace.rows.push(TraceRow {
            iteration,
            mean_delta_tau: if n_objects == 0 { 0.0 } else { sum_delta / n_objects as f64 },
            max_delta_tau: max_delta,
            bp_unconverged,
            t_smoothed: t_smoothed.clone(),
        });
        if max_delta < cfg.outer_threshold {
            converged = true;
            break;
        }
    }

    let decisions = sets
        .iter()
        .zip(&tau)
        .map(|(set, scores)| {
            let chosen_index = select_truth(&set.objects, scores, Some(&t_smoothed));
            TruthDecision {
                entity: set.entity.clone(),
                predicate: set.predicate.clone(),
                chosen: set.objects[chosen_index].value.clone(),
                chosen_index,
                objects: set
                    .objects
                    .iter()
                    .zip(scores)
                    .map(|(o, &tau)| ScoredObject {
                        value: o.value.clone(),
                        tau,
                        sources: o.sources.iter().map(|&s| store.sources()[s].clone()).collect(),
                    })
                    .collect(),
            }
        })
        .collect();

    let tau_base = sets.iter().map(|s| object_base_trust(s, &t_smoothed)).collect();
    let state = TrustState {
        sources: store.sources().to_vec(),
        t,
        nbr,
        t_smoothed,
        tau,
        tau_base,
        iteration: trace.len(),
    };
    Ok(Resolution { decisions, state, trace, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Claim, ConflictObject};

    fn claim(e: &str, p: &str, v: NormalizedValue, s: &str) -> Claim {
        Claim {
            entity: EntityClusterId(e.into()),
            predicate: PredicateId(p.into()),
            value: v,
            source: SourceId(s.into()),
        }
    }

    #[test]
    fn mean_of_tau() {
        let store = ClaimStore::from_claims(vec![
            claim("e1", "p", NormalizedValue::number(1.0), "a"),
            claim("e1", "p", NormalizedValue::number(2.0), "b"),
            claim("e2", "p", NormalizedValue::number(1.0), "a"),
            claim("e2", "p", NormalizedValue::number(2.0), "b"),
            claim("e3", "p", NormalizedValue::number(1.0), "a"),
            claim("e3", "p", NormalizedValue::number(2.0), "b"),
            claim("e4", "p", NormalizedValue::number(7.0), "c"),
        ]);
        let tau = vec![vec![0.2, 0.8], vec![0.4, 0.6], vec![0.9, 0.1]];
        let t = source_trustworthiness(&store, &tau, 0.5);
        assert!((t[0] - 0.5).abs() < 1e-15);
        assert!((t[1] - 0.5).abs() < 1e-15);
        // c only has a non-conflicting claim
        assert_eq!(t[2], 0.5);
    }

    #[test]
    fn smoothing_and_base_trust() {
        assert_eq!(smooth_trustworthiness(&[0.6, 0.5], &[0.8, 0.5]), vec![0.7, 0.5]);
        let set = ConflictSet {
            entity: EntityClusterId("e".into()),
            predicate: PredicateId("p".into()),
            objects: vec![
                ConflictObject { value: NormalizedValue::number(1.0), sources: vec![0, 1] },
                ConflictObject { value: NormalizedValue::number(2.0), sources: vec![2] },
            ],
        };
        let base = object_base_trust(&set, &[0.7, 0.9, 0.3]);
        assert!((base[0] - 0.8).abs() < 1e-15);
        assert_eq!(base[1], 0.3);
    }

    #[test]
    fn symmetric_single_set_converges_immediately() {
        let store = ClaimStore::from_claims(vec![
            claim("e", "p", NormalizedValue::Reference("http://x/2".into()), "b"),
            claim("e", "p", NormalizedValue::Reference("http://x/1".into()), "a"),
        ]);
        let r = resolve_all(&store, &PriorBeliefs::neutral(), &SimilarityConfig::default(), &EngineConfig::default())
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations(), 1);
        assert_eq!(r.decisions[0].tau(), vec![0.5, 0.5]);
        assert_eq!(r.decisions[0].chosen, NormalizedValue::Reference("http://x/1".into()));
    }

    #[test]
    fn invalid_config_rejected() {
        let store = ClaimStore::default();
        let cfg = EngineConfig { bp_damping: 1.0, ..Default::default() };
        assert!(resolve_all(&store, &PriorBeliefs::neutral(), &SimilarityConfig::default(), &cfg).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let trace = ConvergenceTrace {
            rows: vec![TraceRow { iteration: 1, mean_delta_tau: 0.25, max_delta_tau: 0.5, bp_unconverged: 0, t_smoothed: vec![] }],
        };
        let mut out = Vec::new();
        trace.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "iteration,mean_delta_tau,max_delta_tau\n1,0.25,0.5\n");
    }
}
