use super::{estimate_word, median, SketchOutcome};
use crate::constants::{force_odd, log2n, Constants};
use crate::engines::{bits_for, BitCost, CongestConfig};
use crate::error::{invalid, Result};
use crate::graph::Graph;
use crate::primitives::{broadcast_words, cube_modulus, elect_leader_and_ids, upcast_k_smallest_grouped, HashFunction, HashKind};
use crate::rng::{derive, run_rng, tag};
use crate::values::ValueAssignment;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmvParams {
    pub epsilon: f64,
    /// Number of independent hash functions; defaults to ⌈c_med·log₂ n⌉ made odd.
    #[serde(default)]
    pub median_width: Option<usize>,
}

impl KmvParams {
    /// t = ⌈100·ε⁻²⌉.
    pub fn t(&self) -> usize {
        (100.0 / (self.epsilon * self.epsilon) - 1e-9).ceil() as usize
    }

    pub fn width(&self, n: usize, consts: &Constants) -> usize {
        self.median_width
            .unwrap_or_else(|| force_odd((consts.c_med * log2n(n) as f64).ceil() as usize))
    }
}

/// One repetition: t·M/w for the t-th smallest distinct hash w, or the
/// number of distinct hashes when fewer than t exist.
pub fn kmv_repetition_estimate(smallest_distinct: &[u64], t: usize, modulus: u64) -> f64 {
    if smallest_distinct.len() < t {
        smallest_distinct.len() as f64
    } else {
        let w = smallest_distinct[t - 1].max(1);
        t as f64 * modulus as f64 / w as f64
    }
}

/// Distinct-count estimate: the leader broadcasts s pairwise hash functions,
/// the t smallest distinct hashes per function are upcast in one pipelined
/// grouped upcast, and the root broadcasts the median estimate.
pub fn f0_estimate(
    g: &Graph,
    vals: &ValueAssignment,
    params: &KmvParams,
    seed: u64,
    consts: &Constants,
) -> Result<SketchOutcome> {
    if !(params.epsilon > 0.0 && params.epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must be in (0, 1], got {}", params.epsilon)));
    }
    let n = g.n();
    let cost = BitCost::new(n, vals.universe(), consts.c0);
    let cfg = CongestConfig::new(derive(seed, &[tag::PHASE, 0]), cost);
    let setup = elect_leader_and_ids(g, &cfg)?;
    let mut stats = setup.stats.clone();
    let (tree, root) = (&setup.tree, setup.leader);

    let t = params.t();
    let s = params.width(n, consts);
    let modulus = cube_modulus(vals.universe());
    let mut rng = run_rng(seed, &[tag::LEADER, 0]);
    let hashes: Vec<HashFunction> = (0..s).map(|_| HashFunction::draw(HashKind::Pairwise, modulus, &mut rng)).collect();
    let words: Vec<u64> = hashes.iter().flat_map(|h| h.words()).collect();
    let (_, bstats) = broadcast_words(g, tree, &words, bits_for(modulus as u128 + 1), &cfg)?;
    stats.absorb(&bstats);

    let items: Vec<Vec<(usize, u64)>> = (0..n)
        .map(|v| match vals.get(v) {
            Some(x) => hashes.iter().enumerate().map(|(j, h)| (j, h.eval(x))).collect(),
            None => Vec::new(),
        })
        .collect();
    let up = upcast_k_smallest_grouped(g, tree, s, t, &items, modulus, false, &cfg)?;
    stats.absorb(&up.stats);

    let reps: Vec<f64> = up.groups.iter().map(|w| kmv_repetition_estimate(w, t, modulus)).collect();
    let estimate = median(reps.clone());
    let width = cost.budget().min(64);
    let (_, fstats) = broadcast_words(g, tree, &[estimate_word(estimate)], width, &cfg)?;
    stats.absorb(&fstats);
    debug_assert_eq!(root, tree.root());
    Ok(SketchOutcome { estimate, repetitions: reps, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;
    use crate::primitives::HashKind;
    use rand::Rng;

    #[test]
    fn t_from_epsilon() {
        assert_eq!(KmvParams { epsilon: 0.1, median_width: None }.t(), 10_000);
        assert_eq!(KmvParams { epsilon: 0.25, median_width: None }.t(), 1600);
        assert_eq!(KmvParams { epsilon: 0.5, median_width: None }.width(1024, &Constants::default()), 21);
    }

    #[test]
    fn single_value_is_exact() {
        let g = generate(&"random-regular:40:4:1".parse().unwrap()).unwrap();
        let vals = ValueAssignment::new(vec![Some(7); 40], 64).unwrap();
        let out = f0_estimate(&g, &vals, &KmvParams { epsilon: 0.5, median_width: Some(5) }, 3, &Constants::default()).unwrap();
        assert_eq!(out.estimate, 1.0);
    }

    #[test]
    fn all_null_is_zero() {
        let g = generate(&"path:6".parse().unwrap()).unwrap();
        let vals = ValueAssignment::new(vec![None; 6], 64).unwrap();
        let out = f0_estimate(&g, &vals, &KmvParams { epsilon: 0.5, median_width: Some(3) }, 3, &Constants::default()).unwrap();
        assert_eq!(out.estimate, 0.0);
    }

    #[test]
    fn small_support_counted_exactly_and_rounds_bounded() {
        let g = generate(&"random-regular:64:6:2".parse().unwrap()).unwrap();
        let vals = ValueAssignment::new((0..64).map(|v| Some(v as u64 % 23 + 1)).collect(), 100).unwrap();
        let params = KmvParams { epsilon: 1.0, median_width: Some(5) };
        let out = f0_estimate(&g, &vals, &params, 9, &Constants::default()).unwrap();
        assert_eq!(out.estimate, 23.0);
        let d = g.diameter() as u64;
        let bound = (3 * d + 2) + (d + 15) + (2 * d + 5 * 100) + d;
        assert!(out.stats.rounds <= bound, "{} > {bound}", out.stats.rounds);
    }

    #[test]
    fn repetition_succeeds_with_constant_probability() {
        // F0 = 4096 ≥ 2t for ε = 0.25.
        let eps = 0.25;
        let t = KmvParams { epsilon: eps, median_width: None }.t();
        let m = cube_modulus(1 << 16);
        let mut rng = run_rng(11, &[]);
        let draws = 300;
        let mut ok = 0;
        let mut hashes = Vec::with_capacity(4096);
        for _ in 0..draws {
            let h = HashFunction::draw(HashKind::Pairwise, m, &mut rng);
            hashes.clear();
            hashes.extend((1..=4096u64).map(|x| h.eval(x * 7 + rng.gen_range(0..7))));
            hashes.sort_unstable();
            hashes.dedup();
            let est = kmv_repetition_estimate(&hashes[..t.min(hashes.len())], t, m);
            ok += usize::from((est - 4096.0).abs() <= eps * 4096.0);
        }
        assert!(ok as f64 / draws as f64 >= 2.0 / 3.0 - 0.05, "{ok}/{draws}");
    }
}
