//! Centralized ground truth for every statistic the distributed algorithms compute.

use crate::error::{Error, Result};
use crate::values::{FrequencyVector, ValueAssignment};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Direct-counting statistics of an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactStats {
    pub n: usize,
    pub freq: FrequencyVector,
    pub moments: BTreeMap<u32, BigUint>,
    pub entropy: f64,
    pub top_k: Vec<(u64, u64)>,
}

impl ExactStats {
    pub fn f0(&self) -> u64 {
        self.freq.f0()
    }

    pub fn f1(&self) -> u64 {
        self.freq.f1()
    }

    pub fn moment(&self, p: u32) -> BigUint {
        self.moments.get(&p).cloned().unwrap_or_else(|| self.freq.moment(p))
    }

    pub fn to_json(&self) -> Value {
        let moments: serde_json::Map<String, Value> = self
            .moments
            .iter()
            .map(|(p, m)| (format!("F{p}"), big_to_json(m)))
            .collect();
        json!({
            "n": self.n,
            "non_empty": self.f1(),
            "moments": moments,
            "entropy": self.entropy,
            "top_k": self.top_k.iter().map(|&(v, c)| json!({"value": v, "count": c})).collect::<Vec<_>>(),
        })
    }
}

fn big_to_json(m: &BigUint) -> Value {
    match m.to_u64() {
        Some(x) => json!(x),
        None => json!(m.to_string()),
    }
}

/// F_p for each requested p, natural-log entropy and the top-`k` list.
pub fn exact_stats(vals: &ValueAssignment, ps: &[u32], k: usize) -> ExactStats {
    let freq = vals.frequencies();
    ExactStats {
        n: vals.n(),
        moments: ps.iter().map(|&p| (p, freq.moment(p))).collect(),
        entropy: freq.entropy(),
        top_k: freq.top_k(k),
        freq,
    }
}

/// f_i^p / F_p over the support, in increasing value order.
pub fn lp_distribution(freq: &FrequencyVector, p: u32) -> Result<Vec<(u64, f64)>> {
    if freq.f0() == 0 {
        return Err(Error::EmptyInput("lp distribution of an empty support"));
    }
    let total = freq.moment(p);
    Ok(freq
        .iter()
        .map(|(v, c)| {
            let num = BigUint::from(c).pow(p);
            (v, ratio(&num, &total))
        })
        .collect())
}

/// Exact-ish quotient of two big integers as f64.
fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().saturating_sub(60);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Total-variation distance between a distribution and the empirical law of `counts`.
pub fn total_variation(expected: &[(u64, f64)], counts: &BTreeMap<u64, u64>) -> f64 {
    let total: u64 = counts.values().sum();
    let mut dist = 0.0;
    for &(v, p) in expected {
        let q = counts.get(&v).copied().unwrap_or(0) as f64 / total.max(1) as f64;
        dist += (p - q).abs();
    }
    let outside: u64 = counts
        .iter()
        .filter(|(v, _)| expected.binary_search_by_key(*v, |e| e.0).is_err())
        .map(|(_, &c)| c)
        .sum();
    dist += outside as f64 / total.max(1) as f64;
    dist / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assignment(vals: &[Option<u64>]) -> ValueAssignment {
        ValueAssignment::new(vals.to_vec(), 1 << 20).unwrap()
    }

    #[test]
    fn small_instance_moments() {
        let s = exact_stats(&assignment(&[Some(1), Some(1), Some(2)]), &[0, 1, 2, 3], 2);
        assert_eq!(s.f0(), 2);
        assert_eq!(s.f1(), 3);
        assert_eq!(s.moment(2), BigUint::from(5u32));
        assert_eq!(s.moment(3), BigUint::from(9u32));
        assert_eq!(s.top_k, vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn all_null_is_zero() {
        let s = exact_stats(&assignment(&[None, None]), &[0, 1, 2], 3);
        assert!(s.moments.values().all(|m| *m == BigUint::default()));
        assert_eq!(s.entropy, 0.0);
        assert!(lp_distribution(&s.freq, 2).is_err());
    }

    #[test]
    fn uniform_entropy_is_log_d() {
        let vals: Vec<Option<u64>> = (0..60).map(|i| Some(i % 12 + 1)).collect();
        let s = exact_stats(&assignment(&vals), &[], 0);
        assert!((s.entropy - 12f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lp_small_cases() {
        let f = FrequencyVector::from_counts([(1, 2), (2, 1)]);
        let d = lp_distribution(&f, 2).unwrap();
        assert!((d[0].1 - 0.8).abs() < 1e-15 && (d[1].1 - 0.2).abs() < 1e-15);
        let single = FrequencyVector::from_counts([(7, 9)]);
        assert_eq!(lp_distribution(&single, 3).unwrap(), vec![(7, 1.0)]);
    }

    #[test]
    fn lp_matches_integer_recomputation_on_zipf_counts() {
        let counts: Vec<(u64, u64)> = (1..=50u64).map(|i| (i, (1000.0 * (i as f64).powf(-1.5)).ceil() as u64)).collect();
        let f = FrequencyVector::from_counts(counts.clone());
        let d = lp_distribution(&f, 3).unwrap();
        let total: u128 = counts.iter().map(|&(_, c)| (c as u128).pow(3)).sum();
        for ((v, p), (w, c)) in d.iter().zip(&counts) {
            assert_eq!(v, w);
            assert!((p - (*c as u128).pow(3) as f64 / total as f64).abs() < 1e-15);
        }
        assert!((d.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_variation_basics() {
        let exp = vec![(1, 0.5), (2, 0.5)];
        let obs: BTreeMap<u64, u64> = [(1, 50), (2, 50)].into();
        assert_eq!(total_variation(&exp, &obs), 0.0);
        let obs: BTreeMap<u64, u64> = [(3, 10)].into();
        assert!((total_variation(&exp, &obs) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn moment_inequalities(vals in proptest::collection::vec(proptest::option::of(1u64..20), 1..80)) {
            let a = assignment(&vals);
            let n = a.n() as f64;
            let s = exact_stats(&a, &[1, 2, 3], 5);
            prop_assert!(s.f0() <= s.f1() && s.f1() as usize <= a.n());
            // ‖f‖_k ≤ n^(1/k − 1/p)·‖f‖_p for k < p.
            for (k, p) in [(1u32, 2u32), (2, 3), (1, 3)] {
                let nk = s.freq.moment_f64(k).powf(1.0 / k as f64);
                let np = s.freq.moment_f64(p).powf(1.0 / p as f64);
                prop_assert!(nk <= n.powf(1.0 / k as f64 - 1.0 / p as f64) * np * (1.0 + 1e-12));
            }
        }

        #[test]
        fn moments_monotone_in_counts(counts in proptest::collection::vec(1u64..50, 1..20), bump in 0usize..20) {
            let f = FrequencyVector::from_counts(counts.iter().enumerate().map(|(i, &c)| (i as u64 + 1, c)));
            let i = bump % counts.len();
            let g = FrequencyVector::from_counts(counts.iter().enumerate().map(|(j, &c)| (j as u64 + 1, c + u64::from(j == i))));
            for p in 1..=4 {
                prop_assert!(g.moment(p) > f.moment(p));
            }
        }
    }
}
