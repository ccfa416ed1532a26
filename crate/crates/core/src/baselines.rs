//! Comparison resolvers: majority vote and TruthFinder.
//!
//! TruthFinder follows the usual formulation: a source's trust is the mean
//! confidence of the facts it asserts; a fact's raw score is the sum of
//! `-ln(1 - trust)` over its supporters, adjusted by the scores of similar
//! facts in the same conflict set and squashed through a logistic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::select_truth;
use crate::exec::Execution;
use crate::graph::EntityClusterId;
use crate::rdf::{ClaimStore, ConflictSet, NormalizedValue, PredicateId};
use crate::similarity::{sim, SimilarityConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vote,
    TruthFinder,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vote => "vote",
            Method::TruthFinder => "truthfinder",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vote" => Ok(Method::Vote),
            "truthfinder" | "truth_finder" => Ok(Method::TruthFinder),
            other => Err(format!("unknown baseline method `{other}` (expected vote or truthfinder)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDecision {
    pub entity: EntityClusterId,
    pub predicate: PredicateId,
    pub chosen: NormalizedValue,
    pub chosen_index: usize,
    pub method: Method,
    /// Per-object score the decision was made on, in conflict-set order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    pub method: Method,
    pub decisions: Vec<BaselineDecision>,
    pub iterations: usize,
    pub converged: bool,
}

fn decide(set: &ConflictSet, method: Method, scores: Vec<f64>, trust: Option<&[f64]>) -> BaselineDecision {
    let chosen_index = select_truth(&set.objects, &scores, trust);
    BaselineDecision {
        entity: set.entity.clone(),
        predicate: set.predicate.clone(),
        chosen: set.objects[chosen_index].value.clone(),
        chosen_index,
        method,
        scores,
    }
}

/// Supporter share per object; the winner has the most supporters.
pub fn vote(set: &ConflictSet) -> BaselineDecision {
    let total: usize = set.objects.iter().map(|o| o.sources.len()).sum();
    let scores = set.objects.iter().map(|o| o.sources.len() as f64 / total as f64).collect();
    decide(set, Method::Vote, scores, None)
}

pub fn vote_all(store: &ClaimStore, exec: Execution) -> BaselineRun {
    BaselineRun {
        method: Method::Vote,
        decisions: exec.map(store.conflict_sets(), vote),
        iterations: 1,
        converged: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthFinderConfig {
    /// Logistic steepness applied to adjusted fact scores.
    pub dampening: f64,
    /// Weight of the similarity adjustment.
    pub similarity_weight: f64,
    /// Similarity below which another fact counts against this one.
    pub base_sim: f64,
    pub initial_trust: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for TruthFinderConfig {
    fn default() -> Self {
        TruthFinderConfig {
            dampening: 0.3,
            similarity_weight: 0.5,
            base_sim: 0.5,
            initial_trust: 0.9,
            tolerance: 1e-4,
            max_iter: 50,
        }
    }
}

impl TruthFinderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dampening > 0.0 && self.dampening.is_finite()) {
            return Err(format!("dampening {} must be finite and > 0", self.dampening));
        }
        if !(0.0..=1.0).contains(&self.similarity_weight) || !(0.0..=1.0).contains(&self.base_sim) {
            return Err("similarity_weight and base_sim must lie in [0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.initial_trust) {
            return Err(format!("initial_trust {} not in [0, 1)", self.initial_trust));
        }
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err("tolerance must be > 0 and max_iter >= 1".into());
        }
        Ok(())
    }
}

/// Trust never reaches 1 so that `-ln(1 - trust)` stays finite.
const MAX_TRUST: f64 = 1.0 - 1e-9;

/// Fact confidences for one conflict set given per-source trust.
fn fact_confidence(set: &ConflictSet, sims: &[Vec<f64>], trust: &[f64], cfg: &TruthFinderConfig) -> Vec<f64> {
    let raw: Vec<f64> = set
        .objects
        .iter()
        .map(|o| o.sources.iter().map(|&s| -(1.0 - trust[s].min(MAX_TRUST)).ln()).sum())
        .collect();
    (0..raw.len())
        .map(|i| {
            let adjust: f64 = (0..raw.len())
                .filter(|&j| j != i)
                .map(|j| raw[j] * (sims[i][j] - cfg.base_sim))
                .sum();
            let adjusted = raw[i] + cfg.similarity_weight * adjust;
            1.0 / (1.0 + (-cfg.dampening * adjusted).exp())
        })
        .collect()
}

/// Per-iteration record of the largest source-trust change.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthFinderRun {
    pub run: BaselineRun,
    pub trust: Vec<f64>,
    pub deltas: Vec<f64>,
}

pub fn truthfinder(
    store: &ClaimStore,
    sim_cfg: &SimilarityConfig,
    cfg: &TruthFinderConfig,
    exec: Execution,
) -> Result<TruthFinderRun, String> {
    cfg.validate()?;
    let sets = store.conflict_sets();
    let sims: Vec<Vec<Vec<f64>>> = exec.map(sets, |set| {
        set.objects
            .iter()
            .map(|a| set.objects.iter().map(|b| sim(&a.value, &b.value, sim_cfg)).collect())
            .collect()
    });

    let mut trust = vec![cfg.initial_trust; store.sources().len()];
    let mut confidence: Vec<Vec<f64>> = Vec::new();
    let mut deltas = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        confidence = exec.map_range(sets.len(), |k| fact_confidence(&sets[k], &sims[k], &trust, cfg));
        let next: Vec<f64> = exec.map_range(trust.len(), |s| {
            let (sum, n) = store
                .conflict_claims_of(s)
                .fold((0.0, 0usize), |(sum, n), (set, obj)| (sum + confidence[set][obj], n + 1));
            if n == 0 {
                trust[s]
            } else {
                sum / n as f64
            }
        });
        let delta = next.iter().zip(&trust).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trust = next;
        deltas.push(delta);
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }

    let decisions = sets
        .iter()
        .zip(confidence)
        .map(|(set, scores)| decide(set, Method::TruthFinder, scores, Some(&trust)))
        .collect();
    Ok(TruthFinderRun {
        run: BaselineRun { method: Method::TruthFinder, decisions, iterations: deltas.len(), converged },
        trust,
        deltas,
    })
}
