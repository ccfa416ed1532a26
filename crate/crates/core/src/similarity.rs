//! Pairwise similarity between normalized values, in `[0, 1]`.
//!
//! - numbers: `1 - min(1, |a - b| / (|a| + |b| + eps))`
//! - dates: fraction of year/month/day that agree, a wildcard agreeing with
//!   anything
//! - text: `1 - edit_distance / max_len` on case-folded strings
//! - references: 1 when the IRIs are equal, else 0
//! - values of different kinds: a fixed configurable constant

use serde::{Deserialize, Serialize};

use crate::rdf::{DateValue, NormalizedValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringMetric {
    #[default]
    NormalizedEditDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub numeric_floor: f64,
    pub string_metric: StringMetric,
    pub cross_kind_similarity: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            numeric_floor: 1e-12,
            string_metric: StringMetric::NormalizedEditDistance,
            cross_kind_similarity: 0.0,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.numeric_floor > 0.0) {
            return Err(format!("numeric_floor {} must be > 0", self.numeric_floor));
        }
        if !(0.0..=1.0).contains(&self.cross_kind_similarity) {
            return Err(format!("cross_kind_similarity {} not in [0, 1]", self.cross_kind_similarity));
        }
        Ok(())
    }
}

pub fn sim(a: &NormalizedValue, b: &NormalizedValue, cfg: &SimilarityConfig) -> f64 {
    use NormalizedValue::*;
    match (a, b) {
        (Number(x), Number(y)) => number_sim(x.get(), y.get(), cfg.numeric_floor),
        (Date(x), Date(y)) => date_sim(x, y),
        (Text(x), Text(y)) => match cfg.string_metric {
            StringMetric::NormalizedEditDistance => text_sim(x, y),
        },
        (Reference(x), Reference(y)) => {
            if x == y {
                1.0
            } else {
                0.0
            }
        }
        _ => cfg.cross_kind_similarity,
    }
}

fn number_sim(a: f64, b: f64, floor: f64) -> f64 {
    if a == b {
        return 1.0;
    }
    let rel = (a - b).abs() / (a.abs() + b.abs() + floor);
    1.0 - rel.min(1.0)
}

fn date_sim(a: &DateValue, b: &DateValue) -> f64 {
    fn agree(x: Option<u8>, y: Option<u8>) -> bool {
        match (x, y) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        }
    }
    let matches = (a.year() == b.year()) as u8 + agree(a.month(), b.month()) as u8 + agree(a.day(), b.day()) as u8;
    matches as f64 / 3.0
}

fn text_sim(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    strsim::normalized_levenshtein(&a.to_lowercase(), &b.to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> SimilarityConfig {
        SimilarityConfig::default()
    }

    /// Plain dynamic-programming Levenshtein over chars.
    fn levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                let sub = prev[j - 1] + (a[i - 1] != b[j - 1]) as usize;
                cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            }
            prev = cur;
        }
        prev[b.len()]
    }

    #[test]
    fn table_one_values() {
        let n93 = NormalizedValue::number(93.0);
        assert_eq!(sim(&n93, &n93, &cfg()), 1.0);
        let s = sim(&n93, &NormalizedValue::number(46.0248), &cfg());
        assert!((s - (1.0 - 46.9752 / 139.0248)).abs() < 1e-12);
        assert!((s - 0.662109).abs() < 1e-6);
        let full = NormalizedValue::date(1886, Some(10), Some(28));
        let partial = NormalizedValue::date(1886, None, None);
        assert_eq!(sim(&full, &partial, &cfg()), 1.0);
    }

    #[test]
    fn dates_count_components() {
        let a = NormalizedValue::date(1886, Some(10), Some(28));
        assert!((sim(&a, &NormalizedValue::date(1887, Some(10), Some(28)), &cfg()) - 2.0 / 3.0).abs() < 1e-15);
        assert!((sim(&a, &NormalizedValue::date(1887, Some(11), Some(28)), &cfg()) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(sim(&a, &NormalizedValue::date(1887, Some(11), Some(27)), &cfg()), 0.0);
    }

    #[test]
    fn text_is_case_folded() {
        let a = NormalizedValue::Text("Liberty".into());
        let b = NormalizedValue::Text("liberty".into());
        assert_eq!(sim(&a, &b, &cfg()), 1.0);
        let c = NormalizedValue::Text("Libertine".into());
        let want = 1.0 - levenshtein("liberty", "libertine") as f64 / 9.0;
        assert!((sim(&a, &c, &cfg()) - want).abs() < 1e-15);
    }

    #[test]
    fn references_and_cross_kind() {
        let r1 = NormalizedValue::Reference("http://a".into());
        let r2 = NormalizedValue::Reference("http://b".into());
        assert_eq!(sim(&r1, &r1, &cfg()), 1.0);
        assert_eq!(sim(&r1, &r2, &cfg()), 0.0);
        let n = NormalizedValue::number(1.0);
        assert_eq!(sim(&r1, &n, &cfg()), 0.0);
        let c = SimilarityConfig { cross_kind_similarity: 0.25, ..cfg() };
        assert_eq!(sim(&r1, &n, &c), 0.25);
    }

    #[test]
    fn zero_numbers() {
        let z = NormalizedValue::number(0.0);
        assert_eq!(sim(&z, &z, &cfg()), 1.0);
        assert!(sim(&z, &NormalizedValue::number(1e-3), &cfg()) < 1e-8);
    }

    fn value() -> impl Strategy<Value = NormalizedValue> {
        prop_oneof![
            (-1e6f64..1e6).prop_map(NormalizedValue::number),
            (1800i32..1900, proptest::option::of(1u8..=12), 1u8..=28).prop_map(|(y, m, d)| {
                NormalizedValue::date(y, m, m.map(|_| d))
            }),
            "[a-zA-Z ]{0,12}".prop_map(NormalizedValue::Text),
            "[a-c]{1,2}".prop_map(|s| NormalizedValue::Reference(format!("http://x.org/{s}"))),
        ]
    }

    proptest! {
        #[test]
        fn symmetric_bounded_reflexive(a in value(), b in value()) {
            let ab = sim(&a, &b, &cfg());
            prop_assert_eq!(ab, sim(&b, &a, &cfg()));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(sim(&a, &a, &cfg()), 1.0);
        }

        #[test]
        fn text_matches_dp_oracle(a in "[a-dA-D]{0,8}", b in "[a-dA-D]{0,8}") {
            let (la, lb) = (a.to_lowercase(), b.to_lowercase());
            let max = la.chars().count().max(lb.chars().count());
            let want = if max == 0 { 1.0 } else { 1.0 - levenshtein(&la, &lb) as f64 / max as f64 };
            let got = sim(&NormalizedValue::Text(a), &NormalizedValue::Text(b), &cfg());
            prop_assert!((got - want).abs() < 1e-12);
        }

        #[test]
        fn numeric_similarity_non_increasing(b in -1e3f64..1e3, d1 in 0f64..1e3, d2 in 0f64..1e3) {
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let bv = NormalizedValue::number(b);
            let s_near = sim(&NormalizedValue::number(b + near), &bv, &cfg());
            let s_far = sim(&NormalizedValue::number(b + far), &bv, &cfg());
            prop_assert!(s_far <= s_near + 1e-12);
        }
    }
}
