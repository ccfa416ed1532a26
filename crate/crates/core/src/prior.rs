//! Source prior beliefs from the source belief graph.
//!
//! Each source's belief is `(1 - d) + d * sum(belief(l) * links(l, j) / out(l))`
//! over its in-neighbours `l`, iterated to a fixed point with synchronous
//! sweeps. There is no `1/N` teleport term and no redistribution from
//! sources without out-links. Beliefs are then min-max normalized to `[0, 1]`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::graph::SourceBeliefGraph;
use crate::rdf::SourceId;

/// Normalized prior assumed for sources that are not in the graph, and for
/// every source when all beliefs are equal.
pub const NEUTRAL_PRIOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub damping: f64,
    /// Stop once no belief moves by more than this in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig { damping: 0.85, tolerance: 1e-9, max_sweeps: 200 }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<(), PriorError> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(PriorError::InvalidConfig(format!("damping {} not in (0, 1)", self.damping)));
        }
        if !(self.tolerance > 0.0) {
            return Err(PriorError::InvalidConfig(format!("tolerance {} must be > 0", self.tolerance)));
        }
        if self.max_sweeps == 0 {
            return Err(PriorError::InvalidConfig("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorError {
    #[error("source belief graph is empty")]
    EmptyGraph,
    #[error("invalid prior configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriorBeliefs {
    pub br: BTreeMap<SourceId, f64>,
    /// Empty until [`normalize_prior`] runs.
    pub nbr: BTreeMap<SourceId, f64>,
    pub sweeps_used: usize,
    /// Largest belief change in the final sweep.
    pub residual: f64,
    pub converged: bool,
}

impl PriorBeliefs {
    /// Beliefs for a corpus with no usable sameAs topology: every source gets
    /// the neutral prior.
    pub fn neutral() -> PriorBeliefs {
        PriorBeliefs { converged: true, ..Default::default() }
    }

    pub fn nbr_of(&self, source: &SourceId) -> f64 {
        self.nbr.get(source).copied().unwrap_or(NEUTRAL_PRIOR)
    }

    /// Writes `source TAB br TAB nbr`, highest belief first.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut rows: Vec<(&SourceId, f64)> = self.br.iter().map(|(s, b)| (s, *b)).collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        for (s, b) in rows {
            writeln!(w, "{s}\t{b}\t{}", self.nbr_of(s))?;
        }
        Ok(())
    }
}

/// Compact in-edge view of the graph: for each target, `(source, links/out)`
/// pairs in source order.
struct InEdges {
    sources: Vec<SourceId>,
    incoming: Vec<Vec<(usize, f64)>>,
}

impl InEdges {
    fn new(sbg: &SourceBeliefGraph) -> Self {
        let sources: Vec<SourceId> = sbg.vertices.iter().cloned().collect();
        let index: BTreeMap<&SourceId, usize> = sources.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut incoming = vec![Vec::new(); sources.len()];
        for ((from, to), &n) in &sbg.multiplicity {
            let out = sbg.out_degree(from) as f64;
            incoming[index[to]].push((index[from], n as f64 / out));
        }
        for list in &mut incoming {
            list.sort_by_key(|&(l, _)| l);
        }
        InEdges { sources, incoming }
    }

    fn apply(&self, br: &[f64], damping: f64, exec: Execution) -> Vec<f64> {
        exec.map_range(br.len(), |j| {
            let inflow: f64 = self.incoming[j].iter().map(|&(l, w)| br[l] * w).sum();
            (1.0 - damping) + damping * inflow
        })
    }
}

pub fn compute_prior(sbg: &SourceBeliefGraph, cfg: &PriorConfig) -> Result<PriorBeliefs, PriorError> {
    compute_prior_with(sbg, cfg, Execution::default())
}

/// Synchronous sweeps from an all-ones start. Hitting `max_sweeps` is not an
/// error; the result is returned with `converged = false`.
pub fn compute_prior_with(
    sbg: &SourceBeliefGraph,
    cfg: &PriorConfig,
    exec: Execution,
) -> Result<PriorBeliefs, PriorError> {
    cfg.validate()?;
    if sbg.is_empty() {
        return Err(PriorError::EmptyGraph);
    }
    let edges = InEdges::new(sbg);
    let mut br = vec![1.0; edges.sources.len()];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        let next = edges.apply(&br, cfg.damping, exec);
        residual = next.iter().zip(&br).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        br = next;
        sweeps += 1;
        if residual < cfg.tolerance {
            break;
        }
    }
    Ok(PriorBeliefs {
        br: edges.sources.into_iter().zip(br).collect(),
        nbr: BTreeMap::new(),
        sweeps_used: sweeps,
        residual,
        converged: residual < cfg.tolerance,
    })
}

/// Min-max normalization. Equal beliefs (including a single source) all map
/// to [`NEUTRAL_PRIOR`].
pub fn normalize_prior(mut beliefs: PriorBeliefs) -> PriorBeliefs {
    let min = beliefs.br.values().copied().fold(f64::INFINITY, f64::min);
    let max = beliefs.br.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let degenerate = !(span > 1e-12 * max.abs().max(1.0));
    beliefs.nbr = beliefs
        .br
        .iter()
        .map(|(s, &b)| {
            let n = if degenerate { NEUTRAL_PRIOR } else { ((b - min) / span).clamp(0.0, 1.0) };
            (s.clone(), n)
        })
        .collect();
    beliefs
}

/// Largest gap between the beliefs and one more application of the
/// recurrence to them.
pub fn fixed_point_residual(sbg: &SourceBeliefGraph, beliefs: &PriorBeliefs, damping: f64) -> f64 {
    let edges = InEdges::new(sbg);
    let br: Vec<f64> = edges.sources.iter().map(|s| beliefs.br[s]).collect();
    let next = edges.apply(&br, damping, Execution::Sequential);
    next.iter().zip(&br).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
