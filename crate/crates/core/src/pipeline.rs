//! Statements in, claim store and source belief graph out.

use crate::exec::Execution;
use crate::graph::{
    build_sameas_graph, project_to_sbg, sameas_closure, EntityClusterMap, SourceBeliefGraph, SourceResolver,
};
use crate::prior::{compute_prior_with, normalize_prior, PriorBeliefs, PriorConfig, PriorError};
use crate::rdf::{build_claims, BuildReport, ClaimStore, PredicateAlignment, RdfStatement, SourcePolicy};

#[derive(Debug)]
pub struct Corpus {
    pub clusters: EntityClusterMap,
    pub store: ClaimStore,
    pub sbg: SourceBeliefGraph,
    pub report: BuildReport,
    pub sameas_edges: usize,
}

pub fn assemble(
    statements: &[RdfStatement],
    policy: SourcePolicy,
    alignment: Option<&PredicateAlignment>,
) -> Corpus {
    let sameas = build_sameas_graph(statements);
    let clusters = sameas_closure(&sameas);
    let resolver = SourceResolver::new(policy, statements);
    let sbg = project_to_sbg(&sameas, &resolver);
    let (store, report) = build_claims(statements, &clusters, alignment, &resolver);
    Corpus { clusters, store, sbg, report, sameas_edges: sameas.edges.len() }
}

/// Normalized priors for the corpus; an empty graph yields neutral priors
/// rather than an error.
pub fn corpus_priors(sbg: &SourceBeliefGraph, cfg: &PriorConfig, exec: Execution) -> Result<PriorBeliefs, PriorError> {
    match compute_prior_with(sbg, cfg, exec) {
        Ok(p) => Ok(normalize_prior(p)),
        Err(PriorError::EmptyGraph) => {
            cfg.validate()?;
            Ok(PriorBeliefs::neutral())
        }
        Err(e) => Err(e),
    }
}
