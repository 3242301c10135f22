use super::{estimate_word, median, SketchOutcome};
use crate::constants::{force_odd, log2n, Constants};
use crate::engines::{bits_for, BitCost, CongestConfig};
use crate::error::{invalid, Result};
use crate::graph::Graph;
use crate::primitives::{aggregate_vector, broadcast_words, cube_modulus, elect_leader_and_ids, smallest_prime_at_least, HashFunction, HashKind};
use crate::rng::{derive, run_rng, tag};
use crate::values::{FrequencyVector, ValueAssignment};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TugOfWarParams {
    pub epsilon: f64,
    /// Number of median groups; defaults to ⌈c_med·log₂ n⌉ made odd.
    #[serde(default)]
    pub median_width: Option<usize>,
}

impl TugOfWarParams {
    /// Estimators averaged per group, ⌈16·ε⁻²⌉.
    pub fn per_group(&self) -> usize {
        (16.0 / (self.epsilon * self.epsilon) - 1e-9).ceil() as usize
    }

    pub fn groups(&self, n: usize, consts: &Constants) -> usize {
        self.median_width
            .unwrap_or_else(|| force_odd((consts.c_med * log2n(n) as f64).ceil() as usize))
    }
}

/// Prime modulus for a 4-wise family over the keys j·(N+1) + x, j < per_group.
pub fn tug_of_war_modulus(universe: u64, per_group: usize) -> u64 {
    let domain = (per_group as u64).saturating_mul(universe + 1);
    smallest_prime_at_least(domain.max(cube_modulus(universe)))
}

fn signs_for(h: &HashFunction, x: u64, universe: u64, per_group: usize, buf: &mut Vec<u64>) -> Vec<i8> {
    h.eval_progression(x, universe + 1, per_group, buf);
    buf.iter().map(|&y| if y & 1 == 0 { 1 } else { -1 }).collect()
}

/// One tug-of-war estimate Z² with Z = Σ_v σ(val(v)), for a fresh 4-wise σ.
pub fn tug_of_war_single<R: Rng + ?Sized>(freq: &FrequencyVector, universe: u64, rng: &mut R) -> f64 {
    let h = HashFunction::draw(HashKind::FourWise, cube_modulus(universe), rng);
    let z: i64 = freq.iter().map(|(x, f)| h.sign(x) * f as i64).sum();
    (z as f64) * (z as f64)
}

/// F2 estimate: each group j shares one 4-wise hash over the keys
/// i·(N+1) + x, giving per_group independent-enough sign functions; all
/// counters are summed to the root in one pipelined vector aggregation,
/// and the root takes the median over groups of the mean of Z².
pub fn f2_estimate(
    g: &Graph,
    vals: &ValueAssignment,
    params: &TugOfWarParams,
    seed: u64,
    consts: &Constants,
) -> Result<SketchOutcome> {
    if !(params.epsilon > 0.0 && params.epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must be in (0, 1], got {}", params.epsilon)));
    }
    let n = g.n();
    let universe = vals.universe();
    let cost = BitCost::new(n, universe, consts.c0);
    let cfg = CongestConfig::new(derive(seed, &[tag::PHASE, 0]), cost);
    let setup = elect_leader_and_ids(g, &cfg)?;
    let mut stats = setup.stats.clone();
    let tree = &setup.tree;

    let s1 = params.per_group();
    let s2 = params.groups(n, consts);
    let modulus = tug_of_war_modulus(universe, s1);
    let mut rng = run_rng(seed, &[tag::LEADER, 0]);
    let hashes: Vec<HashFunction> = (0..s2).map(|_| HashFunction::draw(HashKind::FourWise, modulus, &mut rng)).collect();
    let words: Vec<u64> = hashes.iter().flat_map(|h| h.words()).collect();
    let (_, bstats) = broadcast_words(g, tree, &words, bits_for(modulus as u128 + 1), &cfg)?;
    stats.absorb(&bstats);

    let mut cache: HashMap<u64, Vec<i64>> = HashMap::new();
    let mut buf = Vec::with_capacity(s1);
    let vectors: Vec<Vec<i64>> = (0..n)
        .map(|v| match vals.get(v) {
            Some(x) => cache
                .entry(x)
                .or_insert_with(|| {
                    hashes
                        .iter()
                        .flat_map(|h| signs_for(h, x, universe, s1, &mut buf))
                        .map(i64::from)
                        .collect()
                })
                .clone(),
            None => vec![0; s1 * s2],
        })
        .collect();
    let (z, astats) = aggregate_vector(g, tree, vectors, n as u128, &cfg)?;
    stats.absorb(&astats);

    let reps: Vec<f64> = z
        .chunks(s1)
        .map(|c| c.iter().map(|&zi| (zi as f64) * (zi as f64)).sum::<f64>() / s1 as f64)
        .collect();
    let estimate = median(reps.clone());
    let (_, fstats) = broadcast_words(g, tree, &[estimate_word(estimate)], cost.budget().min(64), &cfg)?;
    stats.absorb(&fstats);
    Ok(SketchOutcome { estimate, repetitions: reps, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    #[test]
    fn parameters() {
        let p = TugOfWarParams { epsilon: 0.5, median_width: None };
        assert_eq!(p.per_group(), 64);
        assert_eq!(p.groups(256, &Constants::default()), 17);
        assert!(tug_of_war_modulus(8, 64) >= 64 * 9);
    }

    #[test]
    fn single_value_f2_is_exact() {
        let g = generate(&"cycle:30".parse().unwrap()).unwrap();
        let vals = ValueAssignment::new(vec![Some(4); 30], 10).unwrap();
        let out = f2_estimate(&g, &vals, &TugOfWarParams { epsilon: 0.5, median_width: Some(3) }, 1, &Constants::default()).unwrap();
        assert_eq!(out.estimate, 900.0);
    }

    #[test]
    fn estimate_close_on_skewed_instance() {
        let g = generate(&"random-regular:128:6:3".parse().unwrap()).unwrap();
        let vals: Vec<Option<u64>> = (0..128).map(|v| if v % 9 == 0 { None } else { Some((v as u64 * v as u64) % 17 + 1) }).collect();
        let vals = ValueAssignment::new(vals, 32).unwrap();
        let truth = vals.frequencies().moment_f64(2);
        let params = TugOfWarParams { epsilon: 0.3, median_width: Some(9) };
        let ok = (0..10)
            .filter(|&s| {
                let e = f2_estimate(&g, &vals, &params, s, &Constants::default()).unwrap().estimate;
                (e - truth).abs() <= 0.3 * truth
            })
            .count();
        assert!(ok >= 9, "{ok}/10");
    }

    #[test]
    fn single_estimator_is_unbiased() {
        let freq = FrequencyVector::from_counts([(1, 5), (2, 3), (3, 1), (9, 2)]);
        let truth = freq.moment_f64(2);
        let mut rng = run_rng(5, &[]);
        let k = 100_000;
        let mean = (0..k).map(|_| tug_of_war_single(&freq, 16, &mut rng)).sum::<f64>() / k as f64;
        assert!((mean - truth).abs() <= 0.02 * truth, "{mean} vs {truth}");
    }
}
