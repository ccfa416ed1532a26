//! Gold standards, accuracy scoring and method comparison.

pub mod synth;

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::baselines::{truthfinder, vote_all, Method, TruthFinderConfig};
use crate::engine::{resolve_all_with, EngineConfig, TraceRow};
use crate::exec::Execution;
use crate::graph::EntityClusterId;
use crate::prior::PriorBeliefs;
use crate::rdf::{is_absolute_iri, normalize_object, ClaimStore, NormalizedValue, PredicateId, ValueKind};
use crate::similarity::SimilarityConfig;

pub use synth::{generate, SynthConfig, SynthCorpus, SynthError};

pub type GoldKey = (EntityClusterId, PredicateId);

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no decision for gold entry ({0}, {1})")]
    MissingDecision(EntityClusterId, PredicateId),
    #[error("gold standard is empty")]
    EmptyGold,
    #[error("gold line {line}: {reason}")]
    MalformedGold { line: usize, reason: String },
    #[error("{0}")]
    Method(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a canonical rendering back into a value: numbers first, then dates,
/// then absolute IRIs, else text.
pub fn parse_canonical(s: &str) -> Option<NormalizedValue> {
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Some(NormalizedValue::number(v));
        }
    }
    match normalize_object(s, None) {
        Some(v) if v.kind() == ValueKind::Date => Some(v),
        _ if is_absolute_iri(s) => Some(NormalizedValue::Reference(s.to_string())),
        _ if s.is_empty() => None,
        _ => Some(NormalizedValue::Text(s.to_string())),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldStandard {
    entries: BTreeMap<GoldKey, NormalizedValue>,
}

impl GoldStandard {
    pub fn insert(&mut self, entity: EntityClusterId, predicate: PredicateId, value: NormalizedValue) {
        self.entries.insert((entity, predicate), value);
    }

    pub fn get(&self, entity: &EntityClusterId, predicate: &PredicateId) -> Option<&NormalizedValue> {
        self.entries.get(&(entity.clone(), predicate.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GoldKey, &NormalizedValue)> {
        self.entries.iter()
    }

    /// `entity TAB predicate TAB canonical-value`, sorted by key.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for ((e, p), v) in &self.entries {
            writeln!(w, "{e}\t{p}\t{}", v.render())?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<GoldStandard, EvalError> {
        let mut gold = GoldStandard::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| EvalError::MalformedGold { line: i + 1, reason: reason.to_string() };
            let mut cols = line.splitn(3, '\t');
            let (Some(e), Some(p), Some(v)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(malformed("expected three tab-separated columns"));
            };
            let value = parse_canonical(v).ok_or_else(|| malformed("empty value"))?;
            gold.insert(EntityClusterId(e.to_string()), PredicateId(p.to_string()), value);
        }
        Ok(gold)
    }
}

/// Fraction of gold entries whose decision picked the gold value. Every gold
/// entry must have a decision; decisions without a gold entry are ignored.
pub fn accuracy<'a, I>(decisions: I, gold: &GoldStandard) -> Result<f64, EvalError>
where
    I: IntoIterator<Item = (&'a EntityClusterId, &'a PredicateId, &'a NormalizedValue)>,
{
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let chosen: BTreeMap<(&EntityClusterId, &PredicateId), &NormalizedValue> =
        decisions.into_iter().map(|(e, p, v)| ((e, p), v)).collect();
    let mut correct = 0usize;
    for ((e, p), truth) in gold.iter() {
        match chosen.get(&(e, p)) {
            Some(v) => correct += (*v == truth) as usize,
            None => return Err(EvalError::MissingDecision(e.clone(), p.clone())),
        }
    }
    Ok(correct as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Contender {
    TruthDiscover,
    Vote,
    TruthFinder,
}

impl Contender {
    pub const ALL: [Contender; 3] = [Contender::TruthDiscover, Contender::Vote, Contender::TruthFinder];

    pub fn name(self) -> &'static str {
        match self {
            Contender::TruthDiscover => "truthdiscover",
            Contender::Vote => Method::Vote.name(),
            Contender::TruthFinder => Method::TruthFinder.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Contender,
    pub accuracy: f64,
    pub runtime_ms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration convergence rows, for methods that have them.
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MethodSettings {
    pub similarity: SimilarityConfig,
    pub engine: EngineConfig,
    pub truthfinder: TruthFinderConfig,
}

/// Runs each method on the same store, one after another, and scores it.
pub fn compare(
    store: &ClaimStore,
    priors: &PriorBeliefs,
    gold: &GoldStandard,
    settings: &MethodSettings,
    methods: &[Contender],
    exec: Execution,
) -> Result<Vec<MethodReport>, EvalError> {
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let report = match method {
            Contender::TruthDiscover => {
                let r = resolve_all_with(store, priors, &settings.similarity, &settings.engine, exec)
                    .map_err(|e| EvalError::Method(e.to_string()))?;
                let elapsed = start.elapsed();
                let acc = accuracy(r.decisions.iter().map(|d| (&d.entity, &d.predicate, &d.chosen)), gold)?;
                MethodReport {
                    method,
                    accuracy: acc,
                    runtime_ms: elapsed.as_secs_f64() * 1e3,
                    iterations: r.iterations(),
                    converged: r.converged,
                    trace: r.trace.rows,
                    trace_path: None,
                }
            }
            Contender::Vote | Contender::TruthFinder => {
                let run = if method == Contender::Vote {
                    vote_all(store, exec)
                } else {
                    truthfinder(store, &settings.similarity, &settings.truthfinder, exec)
                        .map_err(EvalError::Method)?
                        .run
                };
                let elapsed = start.elapsed();
                let acc = accuracy(run.decisions.iter().map(|d| (&d.entity, &d.predicate, &d.chosen)), gold)?;
                MethodReport {
                    method,
                    accuracy: acc,
                    runtime_ms: elapsed.as_secs_f64() * 1e3,
                    iterations: run.iterations,
                    converged: run.converged,
                    trace: Vec::new(),
                    trace_path: None,
                }
            }
        };
        out.push(report);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub conflict_sets: usize,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanAccuracy {
    pub method: Contender,
    pub mean_accuracy: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub runs: Vec<SeedReport>,
    pub summary: Vec<MeanAccuracy>,
}

impl ComparisonReport {
    pub fn new(runs: Vec<SeedReport>) -> Self {
        let mut sums: BTreeMap<Contender, (f64, f64, usize)> = BTreeMap::new();
        for run in &runs {
            for m in &run.methods {
                let e = sums.entry(m.method).or_default();
                e.0 += m.accuracy;
                e.1 += m.runtime_ms;
                e.2 += 1;
            }
        }
        let summary = sums
            .into_iter()
            .map(|(method, (acc, ms, n))| MeanAccuracy {
                method,
                mean_accuracy: acc / n as f64,
                mean_runtime_ms: ms / n as f64,
            })
            .collect();
        ComparisonReport { runs, summary }
    }

    pub fn mean_accuracy(&self, method: Contender) -> Option<f64> {
        self.summary.iter().find(|m| m.method == method).map(|m| m.mean_accuracy)
    }

    /// Fixed-width accuracy table, one row per seed plus a mean row.
    pub fn write_table<W: Write>(&self, mut w: W) -> io::Result<()> {
        let methods: Vec<Contender> = self.summary.iter().map(|m| m.method).collect();
        write!(w, "{:>12}", "seed")?;
        for m in &methods {
            write!(w, " {:>14}", m.name())?;
        }
        writeln!(w)?;
        for run in &self.runs {
            write!(w, "{:>12}", run.seed)?;
            for m in &methods {
                match run.methods.iter().find(|r| r.method == *m) {
                    Some(r) => write!(w, " {:>14.4}", r.accuracy)?,
                    None => write!(w, " {:>14}", "-")?,
                }
            }
            writeln!(w)?;
        }
        write!(w, "{:>12}", "mean")?;
        for s in &self.summary {
            write!(w, " {:>14.4}", s.mean_accuracy)?;
        }
        writeln!(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(e: &str) -> (EntityClusterId, PredicateId) {
        (EntityClusterId(e.into()), PredicateId("p".into()))
    }

    fn gold4() -> GoldStandard {
        let mut g = GoldStandard::default();
        for (i, e) in ["a", "b", "c", "d"].iter().enumerate() {
            let (e, p) = key(e);
            g.insert(e, p, NormalizedValue::number(i as f64));
        }
        g
    }

    fn score(values: [f64; 4]) -> Result<f64, EvalError> {
        let keys: Vec<_> = ["a", "b", "c", "d"].iter().map(|e| key(e)).collect();
        let vals: Vec<NormalizedValue> = values.iter().map(|&v| NormalizedValue::number(v)).collect();
        accuracy(keys.iter().zip(&vals).map(|((e, p), v)| (e, p, v)), &gold4())
    }

    #[test]
    fn counts_matches() {
        assert_eq!(score([0.0, 1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(score([9.0, 9.0, 9.0, 9.0]).unwrap(), 0.0);
        assert_eq!(score([0.0, 1.0, 2.0, 9.0]).unwrap(), 0.75);
    }

    #[test]
    fn missing_decision_is_an_error() {
        let (e, p) = key("a");
        let v = NormalizedValue::number(0.0);
        assert!(matches!(accuracy([(&e, &p, &v)], &gold4()), Err(EvalError::MissingDecision(..))));
    }

    #[test]
    fn gold_tsv_round_trip() {
        let mut g = GoldStandard::default();
        g.insert(EntityClusterId("http://x/e1".into()), PredicateId("http://p/n".into()), NormalizedValue::number(46.0248));
        g.insert(EntityClusterId("http://x/e1".into()), PredicateId("http://p/d".into()), NormalizedValue::date(1886, None, None));
        g.insert(EntityClusterId("http://x/e2".into()), PredicateId("http://p/t".into()), NormalizedValue::Text("Liberty Island".into()));
        g.insert(EntityClusterId("http://x/e3".into()), PredicateId("http://p/r".into()), NormalizedValue::Reference("http://x/y".into()));
        let mut buf = Vec::new();
        g.write_tsv(&mut buf).unwrap();
        assert_eq!(GoldStandard::read_tsv(&buf[..]).unwrap(), g);
    }

    #[test]
    fn bad_gold_line() {
        assert!(matches!(GoldStandard::read_tsv(&b"only\ttwo\n"[..]), Err(EvalError::MalformedGold { line: 1, .. })));
    }
}
