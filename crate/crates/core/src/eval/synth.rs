//! Seeded synthetic corpora with known truth.
//!
//! Sources get a reliability and a popularity. Popularity comes from a
//! preferential-attachment graph over the sources, raised to a power so that
//! a handful of sources carry most of the claims. Each conflict set samples
//! its supporters by popularity; every supporter asserts the gold value with
//! probability equal to its reliability and otherwise one of the false
//! candidates. False candidates are small perturbations of the gold value,
//! each in a different direction, so they resemble the gold value more than
//! they resemble each other.
//!
//! Every source publishes its own IRI for an entity, and the IRIs of one
//! entity are tied together by a random tree of `owl:sameAs` links. Each link
//! points from the less reliable to the more reliable publisher with
//! probability `sameas_fidelity`.

use std::collections::BTreeSet;
use std::io::{self, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GoldStandard;
use crate::graph::EntityClusterId;
use crate::rdf::{Literal, NormalizedValue, PredicateId, RdfStatement, SourceId, Term, OWL_SAME_AS};

/// Attempts at drawing a conflict set that contains the gold value and at
/// least two distinct values before one is patched by hand.
const MAX_REDRAWS: usize = 64;

pub const ONTOLOGY: &str = "http://synth.example.org/ontology/";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_sources: usize,
    pub n_entities: usize,
    pub n_conflict_predicates: usize,
    /// Number of conflict sets; defaults to one per entity and conflict
    /// predicate. Entities beyond the conflicting ones only carry a label.
    pub n_conflicts: Option<usize>,
    pub attachment_m: usize,
    pub reliability_range: (f64, f64),
    pub values_per_conflict: usize,
    /// Inclusive bounds on the number of sources per conflict set.
    pub supporters: (usize, usize),
    /// A conflict set with `min + j` supporters is drawn with weight
    /// `supporter_decay^j`; 1 makes every size in range equally likely.
    pub supporter_decay: f64,
    /// Give each candidate value exactly one supporter, so no value dominates.
    pub uniform_support: bool,
    pub sameas_fidelity: f64,
    /// Exponent applied to attachment degree to get claim propensity.
    pub popularity_exponent: f64,
    /// An erring source picks the `j`-th false candidate with weight
    /// `(j + 1)^-skew`; 0 spreads errors evenly, larger values make erring
    /// sources repeat the same wrong value.
    pub false_value_skew: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sources: 50,
            n_entities: 500,
            n_conflict_predicates: 4,
            n_conflicts: None,
            attachment_m: 2,
            reliability_range: (0.3, 0.95),
            values_per_conflict: 4,
            supporters: (2, 6),
            supporter_decay: 0.25,
            uniform_support: false,
            sameas_fidelity: 0.8,
            popularity_exponent: 4.0,
            false_value_skew: 0.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    Invalid(String),
    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(String),
}

impl SynthConfig {
    pub fn conflicts(&self) -> usize {
        self.n_conflicts.unwrap_or(self.n_entities * self.n_conflict_predicates)
    }

    fn supporter_bounds(&self) -> (usize, usize) {
        if self.uniform_support {
            (self.values_per_conflict, self.values_per_conflict)
        } else {
            self.supporters
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: String| Err(SynthError::Invalid(m));
        if self.n_sources == 0 || self.n_entities == 0 || self.n_conflict_predicates == 0 || self.attachment_m == 0 {
            return invalid("n_sources, n_entities, n_conflict_predicates and attachment_m must be >= 1".into());
        }
        let (lo, hi) = self.reliability_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return invalid(format!("reliability_range ({lo}, {hi}) must be ordered within [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.sameas_fidelity) {
            return invalid(format!("sameas_fidelity {} not in [0, 1]", self.sameas_fidelity));
        }
        if !(self.popularity_exponent >= 0.0 && self.popularity_exponent.is_finite()) {
            return invalid(format!("popularity_exponent {} must be finite and >= 0", self.popularity_exponent));
        }
        if !(self.supporter_decay > 0.0 && self.supporter_decay.is_finite()) {
            return invalid(format!("supporter_decay {} must be finite and > 0", self.supporter_decay));
        }
        if !(self.false_value_skew >= 0.0 && self.false_value_skew.is_finite()) {
            return invalid(format!("false_value_skew {} must be finite and >= 0", self.false_value_skew));
        }
        if self.values_per_conflict < 2 {
            return invalid("values_per_conflict must be >= 2".into());
        }
        if self.conflicts() > self.n_entities * self.n_conflict_predicates {
            return invalid(format!(
                "{} conflicts requested but only {} entity/predicate pairs exist",
                self.conflicts(),
                self.n_entities * self.n_conflict_predicates
            ));
        }
        if self.values_per_conflict > self.n_sources {
            return Err(SynthError::Infeasible(format!(
                "values_per_conflict {} exceeds n_sources {}",
                self.values_per_conflict, self.n_sources
            )));
        }
        let (smin, smax) = self.supporter_bounds();
        if smin < 2 || smin > smax {
            return invalid(format!("supporters ({smin}, {smax}) must satisfy 2 <= min <= max"));
        }
        if smax > self.n_sources {
            return Err(SynthError::Infeasible(format!("{smax} supporters requested but only {} sources", self.n_sources)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub statements: Vec<RdfStatement>,
    pub gold: GoldStandard,
    pub sources: Vec<SourceId>,
    pub reliability: Vec<f64>,
    /// Conflict-set claims per source.
    pub conflict_claims: Vec<usize>,
}

impl SynthCorpus {
    pub fn write_ntriples<W: Write>(&self, mut w: W) -> io::Result<()> {
        for st in &self.statements {
            writeln!(w, "{st}")?;
        }
        Ok(())
    }
}

pub fn source_host(i: usize) -> String {
    format!("data.source{i:03}.org")
}

fn entity_iri(source: usize, entity: usize) -> String {
    format!("http://{}/resource/E{entity}", source_host(source))
}

#[derive(Clone, Copy)]
enum Kind {
    Number,
    Date,
    Text,
}

fn predicate_kind(p: usize) -> Kind {
    match p % 3 {
        0 => Kind::Number,
        1 => Kind::Date,
        _ => Kind::Text,
    }
}

pub fn predicate_iri(p: usize) -> String {
    let kind = match predicate_kind(p) {
        Kind::Number => "quantity",
        Kind::Date => "date",
        Kind::Text => "name",
    };
    format!("{ONTOLOGY}{kind}{p}")
}

/// Preferential attachment over sources; returns each source's degree.
fn attachment_degrees(cfg: &SynthConfig, reliability: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = cfg.n_sources;
    let seed_nodes = (cfg.attachment_m + 1).min(n);
    let mut degree = vec![0usize; n];
    for a in 0..seed_nodes {
        for b in a + 1..seed_nodes {
            degree[a] += 1;
            degree[b] += 1;
        }
    }
    for u in seed_nodes..n {
        let mut targets = BTreeSet::new();
        while targets.len() < cfg.attachment_m.min(u) {
            let better: Vec<usize> = (0..u).filter(|&v| reliability[v] > reliability[u] && !targets.contains(&v)).collect();
            let pool: Vec<usize> = if !better.is_empty() && rng.gen_bool(cfg.sameas_fidelity) {
                better
            } else {
                (0..u).filter(|v| !targets.contains(v)).collect()
            };
            let v = *pool.choose_weighted(rng, |&v| degree[v] as f64 + 1.0).expect("non-empty pool");
            targets.insert(v);
        }
        for v in targets {
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    degree
}

fn gold_value(kind: Kind, rng: &mut ChaCha8Rng) -> NormalizedValue {
    match kind {
        Kind::Number => NormalizedValue::number((rng.gen_range(100.0..100_000.0f64) * 100.0).round() / 100.0),
        Kind::Date => NormalizedValue::date(rng.gen_range(1800..2000), Some(rng.gen_range(1..=12)), Some(rng.gen_range(1..=28))),
        Kind::Text => {
            let len = rng.gen_range(8..=12);
            let mut word: String = (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
            word[..1].make_ascii_uppercase();
            NormalizedValue::Text(word)
        }
    }
}

/// The `j`-th false candidate for `gold`. Candidates move the gold value in
/// different directions: numbers by growing factors, dates in one component
/// each, text by substitutions at different positions.
fn perturb(gold: &NormalizedValue, j: usize, rng: &mut ChaCha8Rng) -> NormalizedValue {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match gold {
        NormalizedValue::Number(g) => {
            // scale up or down by a growing factor, alternating sides within
            // each magnitude so the pair stays distinct
            let factor = 1.5 + 0.5 * (j / 2) as f64;
            let up = j.is_multiple_of(2) == (sign > 0.0);
            let v = if up { g.get() * factor } else { g.get() / factor };
            NormalizedValue::number((v * 100.0).round() / 100.0)
        }
        NormalizedValue::Date(d) => {
            let offset = (1 + j / 3) as i32 * sign as i32;
            let wrap = |v: u8, modulus: i32| ((v as i32 - 1 + offset).rem_euclid(modulus) + 1) as u8;
            let (y, m, dd) = (d.year(), d.month().unwrap_or(1), d.day().unwrap_or(1));
            match j % 3 {
                0 => NormalizedValue::date(y + offset, Some(m), Some(dd)),
                1 => NormalizedValue::date(y, Some(wrap(m, 12)), Some(dd)),
                _ => NormalizedValue::date(y, Some(m), Some(wrap(dd, 28))),
            }
        }
        NormalizedValue::Text(t) => {
            // two substitutions per candidate, at positions no other
            // candidate touches while the word is long enough
            let mut chars: Vec<char> = t.chars().collect();
            let len = chars.len();
            for pos in [(2 * j) % len, (2 * j + 1) % len] {
                let base = chars[pos].to_ascii_lowercase() as u8 - b'a';
                let mut c = (b'a' + (base + rng.gen_range(1..26u8)) % 26) as char;
                if pos == 0 {
                    c = c.to_ascii_uppercase();
                }
                chars[pos] = c;
            }
            NormalizedValue::Text(chars.into_iter().collect())
        }
        NormalizedValue::Reference(_) => unreachable!("generator never produces references"),
    }
}

fn false_candidates(gold: &NormalizedValue, k: usize, rng: &mut ChaCha8Rng) -> Vec<NormalizedValue> {
    let mut out: Vec<NormalizedValue> = Vec::with_capacity(k - 1);
    let mut j = 0;
    while out.len() < k - 1 {
        let v = perturb(gold, j, rng);
        if &v != gold && !out.contains(&v) {
            out.push(v);
        }
        j += 1;
    }
    out
}

/// Indices into `candidates` (0 is gold) asserted by each supporter.
fn draw_assertions(
    supporters: &[usize],
    reliability: &[f64],
    n_false: usize,
    skew: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let wrong = WeightedIndex::new((0..n_false).map(|j| (j as f64 + 1.0).powf(-skew))).expect("positive weights");
    for _ in 0..MAX_REDRAWS {
        let picks: Vec<usize> = supporters
            .iter()
            .map(|&s| if rng.gen_bool(reliability[s]) { 0 } else { 1 + wrong.sample(rng) })
            .collect();
        let has_gold = picks.contains(&0);
        let distinct = picks.iter().any(|&p| p != picks[0]);
        if has_gold && distinct {
            return picks;
        }
    }
    // Rare unless sources are near-perfect: everyone asserts gold except the
    // least reliable supporter.
    let least = supporters.iter().map(|&s| reliability[s]).fold(f64::INFINITY, f64::min);
    let candidates: Vec<usize> = (0..supporters.len()).filter(|&k| reliability[supporters[k]] == least).collect();
    let worst = *candidates.choose(rng).expect("at least two supporters");
    let mut picks = vec![0; supporters.len()];
    picks[worst] = 1 + wrong.sample(rng);
    picks
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_sources;
    let (rlo, rhi) = cfg.reliability_range;
    let reliability: Vec<f64> = (0..n).map(|_| if rlo == rhi { rlo } else { rng.gen_range(rlo..=rhi) }).collect();
    let degree = attachment_degrees(cfg, &reliability, &mut rng);
    let popularity: Vec<f64> = degree.iter().map(|&d| (d.max(1) as f64).powf(cfg.popularity_exponent)).collect();
    let all_sources: Vec<usize> = (0..n).collect();

    // per entity: (source, predicate, value) claims
    let mut described: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cfg.n_entities];
    let mut claims: Vec<Vec<(usize, usize, NormalizedValue)>> = vec![Vec::new(); cfg.n_entities];
    let mut gold_rows: Vec<(usize, usize, NormalizedValue)> = Vec::with_capacity(cfg.conflicts());
    let mut conflict_claims = vec![0usize; n];
    let (smin, smax) = cfg.supporter_bounds();
    let set_size = WeightedIndex::new((smin..=smax).map(|n| cfg.supporter_decay.powi((n - smin) as i32)))
        .expect("positive weights");

    for c in 0..cfg.conflicts() {
        let entity = c % cfg.n_entities;
        let predicate = c / cfg.n_entities;
        let gold = gold_value(predicate_kind(predicate), &mut rng);
        let falses = false_candidates(&gold, cfg.values_per_conflict, &mut rng);
        let count = smin + set_size.sample(&mut rng);
        let mut supporters: Vec<usize> = all_sources
            .choose_multiple_weighted(&mut rng, count, |&s| popularity[s])
            .expect("positive weights")
            .copied()
            .collect();
        supporters.sort_unstable();
        let picks = if cfg.uniform_support {
            let mut p: Vec<usize> = (0..count).collect();
            p.shuffle(&mut rng);
            p
        } else {
            draw_assertions(&supporters, &reliability, falses.len(), cfg.false_value_skew, &mut rng)
        };
        for (&s, &pick) in supporters.iter().zip(&picks) {
            let value = if pick == 0 { gold.clone() } else { falses[pick - 1].clone() };
            claims[entity].push((s, predicate, value));
            described[entity].insert(s);
            conflict_claims[s] += 1;
        }
        gold_rows.push((entity, predicate, gold));
    }

    let mut statements = Vec::new();
    let label = format!("{ONTOLOGY}label");
    for e in 0..cfg.n_entities {
        if described[e].is_empty() {
            let k = rng.gen_range(1..=2);
            for &s in all_sources.choose_multiple_weighted(&mut rng, k, |&s| popularity[s]).expect("positive weights") {
                described[e].insert(s);
            }
        }
        let members: Vec<usize> = described[e].iter().copied().collect();
        for &s in &members {
            statements.push(RdfStatement {
                subject: entity_iri(s, e),
                predicate: label.clone(),
                object: Term::Literal(Literal::plain(format!("Entity {e}"))),
                graph: None,
                line: 0,
            });
        }
        for (s, p, v) in &claims[e] {
            statements.push(RdfStatement {
                subject: entity_iri(*s, e),
                predicate: predicate_iri(*p),
                object: v.to_term(),
                graph: None,
                line: 0,
            });
        }
        let mut order = members.clone();
        order.shuffle(&mut rng);
        for (k, &a) in order.iter().enumerate().skip(1) {
            let b = *order[..k].choose(&mut rng).expect("non-empty");
            let (lo, hi) = if (reliability[a], a) < (reliability[b], b) { (a, b) } else { (b, a) };
            let (u, v) = if rng.gen_bool(cfg.sameas_fidelity) { (lo, hi) } else { (hi, lo) };
            statements.push(RdfStatement {
                subject: entity_iri(u, e),
                predicate: OWL_SAME_AS.to_string(),
                object: Term::Iri(entity_iri(v, e)),
                graph: None,
                line: 0,
            });
        }
    }

    let mut gold = GoldStandard::default();
    for (e, p, v) in gold_rows {
        let cluster = described[e].iter().map(|&s| entity_iri(s, e)).min().expect("described entity");
        gold.insert(EntityClusterId(cluster), PredicateId(predicate_iri(p)), v);
    }
    Ok(SynthCorpus {
        statements,
        gold,
        sources: (0..n).map(|i| SourceId(source_host(i))).collect(),
        reliability,
        conflict_claims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{sim, SimilarityConfig};

    #[test]
    fn infeasible_configs_rejected() {
        let cfg = SynthConfig { n_sources: 1, values_per_conflict: 2, ..Default::default() };
        assert!(matches!(generate(&cfg), Err(SynthError::Infeasible(_))));
        let cfg = SynthConfig { reliability_range: (0.9, 0.2), ..Default::default() };
        assert!(matches!(generate(&cfg), Err(SynthError::Invalid(_))));
    }

    #[test]
    fn false_candidates_cluster_around_gold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = SimilarityConfig::default();
        for kind in [Kind::Date, Kind::Text] {
            for _ in 0..20 {
                let g = gold_value(kind, &mut rng);
                let f = false_candidates(&g, 4, &mut rng);
                for a in &f {
                    for b in &f {
                        if a != b {
                            assert!(sim(&g, a, &cfg) > sim(a, b, &cfg), "{g} {a} {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SynthConfig { n_entities: 40, ..Default::default() };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap().statements, generate(&other).unwrap().statements);
    }
}
