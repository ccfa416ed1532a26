use thiserror::Error;

use crate::rdf::NormalizedValue;
use crate::similarity::{sim, SimilarityConfig};

/// Smallest distance kept between a base trust value and 0 or 1 so that no
/// potential is zero.
pub const TRUST_CLAMP: f64 = 1e-6;

/// A 2x2 potential indexed `[label_i][label_j]`.
pub type PairTable = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    pub i: usize,
    pub j: usize,
    pub table: PairTable,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("potential entries must be finite and strictly positive")]
    NonPositive,
    #[error("edge ({0}, {1}) is out of range or a self-loop")]
    BadEdge(usize, usize),
    #[error("edge ({0}, {1}) appears twice")]
    DuplicateEdge(usize, usize),
}

/// Binary-label pairwise Markov random field. Each edge is stored once with
/// `i < j`; [`MarkovField::pair`] returns it oriented either way.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovField {
    unary: Vec<[f64; 2]>,
    edges: Vec<PairPotential>,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl MarkovField {
    pub fn new(unary: Vec<[f64; 2]>, edges: Vec<PairPotential>) -> Result<MarkovField, FieldError> {
        if !unary.iter().flatten().all(|&x| positive(x)) {
            return Err(FieldError::NonPositive);
        }
        let mut stored: Vec<PairPotential> = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i == e.j || e.i >= unary.len() || e.j >= unary.len() {
                return Err(FieldError::BadEdge(e.i, e.j));
            }
            if !e.table.iter().flatten().all(|&x| positive(x)) {
                return Err(FieldError::NonPositive);
            }
            let oriented = if e.i < e.j {
                e
            } else {
                PairPotential { i: e.j, j: e.i, table: transpose(e.table) }
            };
            stored.push(oriented);
        }
        stored.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = stored.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(FieldError::DuplicateEdge(w[0].i, w[0].j));
        }
        Ok(MarkovField { unary, edges: stored })
    }

    pub fn len(&self) -> usize {
        self.unary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    pub fn unary(&self) -> &[[f64; 2]] {
        &self.unary
    }

    pub fn edges(&self) -> &[PairPotential] {
        &self.edges
    }

    /// The potential between `a` and `b`, indexed `[label_a][label_b]`.
    pub fn pair(&self, a: usize, b: usize) -> Option<PairTable> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        let e = self.edges.binary_search_by_key(&(i, j), |e| (e.i, e.j)).ok()?;
        let t = self.edges[e].table;
        Some(if a < b { t } else { transpose(t) })
    }
}

fn transpose(t: PairTable) -> PairTable {
    [[t[0][0], t[1][0]], [t[0][1], t[1][1]]]
}

/// Pairwise potential for two objects with similarity `s`: agreeing on
/// "true" is rewarded, disagreeing is penalized, and agreeing on "false" is
/// scaled by `dissimilar_false` (negative means both-false is discouraged
/// for similar objects).
pub fn pair_table(s: f64, coupling: f64, dissimilar_false: f64) -> PairTable {
    let both_true = (coupling * s).exp();
    let both_false = (coupling * s * dissimilar_false).exp();
    let mixed = (-coupling * s).exp();
    [[both_false, mixed], [mixed, both_true]]
}

/// Object pairs whose similarity reaches `threshold`, as `(i, j, s)` with
/// `i < j`.
pub fn similarity_edges(
    values: &[&NormalizedValue],
    sim_cfg: &SimilarityConfig,
    threshold: f64,
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let s = sim(values[i], values[j], sim_cfg);
            if s >= threshold {
                out.push((i, j, s));
            }
        }
    }
    out
}

/// Assembles the field from base trust values and precomputed similarity
/// edges. Base trust is clamped to `[TRUST_CLAMP, 1 - TRUST_CLAMP]`.
pub fn field_from_parts(
    base_trust: &[f64],
    sims: &[(usize, usize, f64)],
    coupling: f64,
    dissimilar_false: f64,
) -> MarkovField {
    let unary = base_trust
        .iter()
        .map(|&t| {
            let t = t.clamp(TRUST_CLAMP, 1.0 - TRUST_CLAMP);
            [1.0 - t, t]
        })
        .collect();
    let edges = sims
        .iter()
        .map(|&(i, j, s)| PairPotential { i, j, table: pair_table(s, coupling, dissimilar_false) })
        .collect();
    MarkovField::new(unary, edges).expect("clamped potentials are positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_similarity_table() {
        let t = pair_table(1.0, 1.0, -0.5);
        assert!((t[1][1] - std::f64::consts::E).abs() < 1e-15);
        assert!((t[0][0] - 0.6065306597126334).abs() < 1e-15);
        assert!((t[0][1] - 0.36787944117144233).abs() < 1e-15);
        assert_eq!(t[0][1], t[1][0]);
    }

    #[test]
    fn zero_similarity_edge_is_inert() {
        assert_eq!(pair_table(0.0, 1.0, -0.5), [[1.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn symmetric_storage() {
        let table = [[1.0, 2.0], [3.0, 4.0]];
        let f = MarkovField::new(vec![[1.0, 1.0]; 3], vec![PairPotential { i: 2, j: 0, table }]).unwrap();
        assert_eq!(f.edges()[0].i, 0);
        assert_eq!(f.pair(2, 0), Some(table));
        assert_eq!(f.pair(0, 2), Some([[1.0, 3.0], [2.0, 4.0]]));
        assert_eq!(f.pair(0, 1), None);
    }

    #[test]
    fn rejects_bad_fields() {
        let ok = [[1.0, 1.0], [1.0, 1.0]];
        assert_eq!(MarkovField::new(vec![[0.0, 1.0]], vec![]), Err(FieldError::NonPositive));
        assert_eq!(
            MarkovField::new(vec![[1.0, 1.0]; 2], vec![PairPotential { i: 1, j: 1, table: ok }]),
            Err(FieldError::BadEdge(1, 1))
        );
        assert_eq!(
            MarkovField::new(
                vec![[1.0, 1.0]; 2],
                vec![PairPotential { i: 0, j: 1, table: ok }, PairPotential { i: 1, j: 0, table: ok }]
            ),
            Err(FieldError::DuplicateEdge(0, 1))
        );
    }

    #[test]
    fn clamps_base_trust() {
        let f = field_from_parts(&[0.0, 1.0, 0.3], &[], 1.0, -0.5);
        assert_eq!(f.unary()[0], [1.0 - TRUST_CLAMP, TRUST_CLAMP]);
        assert_eq!(f.unary()[1][1], 1.0 - TRUST_CLAMP);
        assert_eq!(f.unary()[2], [0.7, 0.3]);
        assert!(f.edges().is_empty());
    }

    #[test]
    fn threshold_filters_edges() {
        let vals = [NormalizedValue::number(100.0), NormalizedValue::number(101.0), NormalizedValue::number(-100.0)];
        let refs: Vec<&NormalizedValue> = vals.iter().collect();
        let e = similarity_edges(&refs, &SimilarityConfig::default(), 0.1);
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].0, e[0].1), (0, 1));
        assert_eq!(similarity_edges(&refs, &SimilarityConfig::default(), 0.0).len(), 3);
    }
}
