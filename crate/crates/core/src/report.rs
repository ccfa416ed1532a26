//! JSON-lines decision records shared by the engine and the baselines.

use std::io::{self, Write};

use serde::Serialize;

use crate::baselines::BaselineRun;
use crate::engine::Resolution;
use crate::rdf::{ClaimStore, NormalizedValue, SourceId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectRecord<'a> {
    pub value: &'a NormalizedValue,
    pub tau: f64,
    pub sources: Vec<&'a SourceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRecord<'a> {
    pub entity: &'a str,
    pub predicate: &'a str,
    pub method: &'a str,
    pub chosen: &'a NormalizedValue,
    pub objects: Vec<ObjectRecord<'a>>,
    pub iterations: usize,
    pub converged: bool,
}

fn write_records<'a, W: Write>(mut w: W, records: impl Iterator<Item = DecisionRecord<'a>>) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_resolution<W: Write>(w: W, resolution: &Resolution) -> io::Result<()> {
    let iterations = resolution.iterations();
    write_records(
        w,
        resolution.decisions.iter().map(|d| DecisionRecord {
            entity: &d.entity.0,
            predicate: &d.predicate.0,
            method: "truthdiscover",
            chosen: &d.chosen,
            objects: d
                .objects
                .iter()
                .map(|o| ObjectRecord { value: &o.value, tau: o.tau, sources: o.sources.iter().collect() })
                .collect(),
            iterations,
            converged: resolution.converged,
        }),
    )
}

/// Baseline decisions carry their per-object score in the `tau` field.
pub fn write_baseline<W: Write>(w: W, store: &ClaimStore, run: &BaselineRun) -> io::Result<()> {
    let sources = store.sources();
    write_records(
        w,
        run.decisions.iter().zip(store.conflict_sets()).map(|(d, set)| DecisionRecord {
            entity: &d.entity.0,
            predicate: &d.predicate.0,
            method: d.method.name(),
            chosen: &d.chosen,
            objects: set
                .objects
                .iter()
                .zip(&d.scores)
                .map(|(o, &tau)| ObjectRecord {
                    value: &o.value,
                    tau,
                    sources: o.sources.iter().map(|&s| &sources[s]).collect(),
                })
                .collect(),
            iterations: run.iterations,
            converged: run.converged,
        }),
    )
}
