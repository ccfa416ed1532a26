//! Sum-product loopy belief propagation on a binary pairwise field.
//!
//! Flooding schedule: every directed message is recomputed from the previous
//! round's messages, normalized, then damped toward its old value. Exact on
//! forests once converged.

use super::field::MarkovField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    /// Weight on the previous message, in `[0, 1)`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_rounds: usize,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig { damping: 0.3, tolerance: 1e-6, max_rounds: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpResult {
    /// Normalized node beliefs `[P(y=0), P(y=1)]`.
    pub beliefs: Vec<[f64; 2]>,
    pub rounds: usize,
    pub converged: bool,
    /// Largest message change in the last round.
    pub max_delta: f64,
}

impl BpResult {
    pub fn marginals(&self) -> Vec<f64> {
        self.beliefs.iter().map(|b| b[1]).collect()
    }
}

struct Link {
    /// Potential indexed `[label_self][label_neighbor]`.
    psi: [[f64; 2]; 2],
    /// Message neighbor -> this node.
    incoming: usize,
    /// Message this node -> neighbor.
    outgoing: usize,
}

fn normalize(m: [f64; 2]) -> [f64; 2] {
    let z = m[0] + m[1];
    [m[0] / z, m[1] / z]
}

pub fn loopy_bp(field: &MarkovField, cfg: &BpConfig) -> BpResult {
    let n = field.len();
    let mut links: Vec<Vec<Link>> = (0..n).map(|_| Vec::new()).collect();
    // message 2e carries i -> j, message 2e + 1 carries j -> i
    for (e, pot) in field.edges().iter().enumerate() {
        let t = pot.table;
        let transposed = [[t[0][0], t[1][0]], [t[0][1], t[1][1]]];
        links[pot.i].push(Link { psi: t, incoming: 2 * e + 1, outgoing: 2 * e });
        links[pot.j].push(Link { psi: transposed, incoming: 2 * e, outgoing: 2 * e + 1 });
    }
    let mut messages = vec![[0.5, 0.5]; 2 * field.edges().len()];
    let mut next = messages.clone();

    let mut rounds = 0;
    let mut max_delta = 0.0;
    let mut converged = messages.is_empty();
    while !converged && rounds < cfg.max_rounds {
        rounds += 1;
        max_delta = 0.0f64;
        for (v, node_links) in links.iter().enumerate() {
            let phi = field.unary()[v];
            for (k, out) in node_links.iter().enumerate() {
                let mut cavity = phi;
                for (k2, other) in node_links.iter().enumerate() {
                    if k2 != k {
                        let m = messages[other.incoming];
                        cavity[0] *= m[0];
                        cavity[1] *= m[1];
                    }
                }
                let psi = out.psi;
                let raw = [
                    cavity[0] * psi[0][0] + cavity[1] * psi[1][0],
                    cavity[0] * psi[0][1] + cavity[1] * psi[1][1],
                ];
                let fresh = normalize(raw);
                let old = messages[out.outgoing];
                let damped = normalize([
                    (1.0 - cfg.damping) * fresh[0] + cfg.damping * old[0],
                    (1.0 - cfg.damping) * fresh[1] + cfg.damping * old[1],
                ]);
                max_delta = max_delta.max((damped[0] - old[0]).abs()).max((damped[1] - old[1]).abs());
                next[out.outgoing] = damped;
            }
        }
        std::mem::swap(&mut messages, &mut next);
        converged = max_delta < cfg.tolerance;
    }

    let beliefs = links
        .iter()
        .enumerate()
        .map(|(v, node_links)| {
            let mut b = field.unary()[v];
            for l in node_links {
                let m = messages[l.incoming];
                b[0] *= m[0];
                b[1] *= m[1];
            }
            normalize(b)
        })
        .collect();
    BpResult { beliefs, rounds, converged, max_delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::field::PairPotential;

    #[test]
    fn edgeless_field_is_factorized() {
        let f = MarkovField::new(vec![[0.2, 0.6], [3.0, 1.0]], vec![]).unwrap();
        let r = loopy_bp(&f, &BpConfig::default());
        assert!(r.converged);
        assert_eq!(r.rounds, 0);
        assert!((r.beliefs[0][1] - 0.75).abs() < 1e-15);
        assert!((r.beliefs[1][1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_stays_half() {
        let f = MarkovField::new(
            vec![[0.5, 0.5]; 2],
            vec![PairPotential { i: 0, j: 1, table: [[1.0, 1.0], [1.0, 1.0]] }],
        )
        .unwrap();
        let r = loopy_bp(&f, &BpConfig::default());
        assert_eq!(r.marginals(), vec![0.5, 0.5]);
    }

    #[test]
    fn two_node_exact() {
        // P(y0, y1) ∝ phi0(y0) phi1(y1) psi(y0, y1); enumerate by hand
        let phi = [[0.3, 0.7], [0.6, 0.4]];
        let psi = [[2.0, 0.5], [0.5, 3.0]];
        let f = MarkovField::new(phi.to_vec(), vec![PairPotential { i: 0, j: 1, table: psi }]).unwrap();
        let r = loopy_bp(&f, &BpConfig { tolerance: 1e-15, max_rounds: 1000, ..Default::default() });
        let mut joint = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                joint[a][b] = phi[0][a] * phi[1][b] * psi[a][b];
            }
        }
        let z: f64 = joint.iter().flatten().sum();
        let p0 = (joint[1][0] + joint[1][1]) / z;
        let p1 = (joint[0][1] + joint[1][1]) / z;
        assert!((r.beliefs[0][1] - p0).abs() < 1e-12);
        assert!((r.beliefs[1][1] - p1).abs() < 1e-12);
        for b in &r.beliefs {
            assert!((b[0] + b[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_cap_flags_non_convergence() {
        let f = MarkovField::new(
            vec![[0.1, 0.9], [0.9, 0.1], [0.5, 0.5]],
            vec![
                PairPotential { i: 0, j: 1, table: [[3.0, 0.1], [0.1, 3.0]] },
                PairPotential { i: 1, j: 2, table: [[3.0, 0.1], [0.1, 3.0]] },
                PairPotential { i: 0, j: 2, table: [[3.0, 0.1], [0.1, 3.0]] },
            ],
        )
        .unwrap();
        let r = loopy_bp(&f, &BpConfig { max_rounds: 1, ..Default::default() });
        assert!(!r.converged);
        assert_eq!(r.rounds, 1);
    }
}
