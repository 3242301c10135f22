use super::duplicate::preprocess_duplicate;
use super::push_sum::{push_sum, push_sum_rounds};
use super::samplers::lp_sample;
use super::Runs;
use crate::constants::{force_odd, log2n, Constants};
use crate::engines::{BitCost, Delivery, GossipAction, GossipCtx, GossipProgram, PartnerSampler, Payload, RoundStats};
use crate::error::{invalid, Result};
use crate::rng::derive;
use crate::values::ValueAssignment;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
struct Value(u64);

impl Payload for Value {
    fn bits(&self, c: &BitCost) -> u32 {
        c.value()
    }
}

struct Collide {
    own: Option<u64>,
    pulls_per_phase: u64,
    phases: u64,
    matches: u64,
    hits: u64,
}

impl GossipProgram for Collide {
    type Msg = Value;
    fn step(&mut self, ctx: &mut GossipCtx<'_, Value>) -> GossipAction<Value> {
        let round = ctx.round();
        let own = self.own;
        self.matches += ctx.take_inbox().filter(|d| matches!(d, Delivery::Pulled { msg: Value(x), .. } if Some(*x) == own)).count() as u64;
        if round > 1 && (round - 1) % self.pulls_per_phase == 0 {
            self.hits += u64::from(self.matches == self.pulls_per_phase);
            self.matches = 0;
        }
        let respond = own.map(Value);
        match own {
            Some(_) if round <= self.phases * self.pulls_per_phase => GossipAction::pull().responding(respond),
            _ => GossipAction::halt().responding(respond),
        }
    }
}

/// F̂_k and its ingredients.
#[derive(Clone, Debug)]
pub struct FkOutcome {
    pub estimate: f64,
    pub phases: u64,
    /// Σ_j Σ_v I_{j,v} as recovered by push-sum.
    pub hits: u64,
    pub stats: RoundStats,
}

/// F̂_k = n^(k−1)/T · Σ_j Σ_v I_{j,v}: in each of T = ⌈c_fk·ε⁻²·log₂ n⌉ phases
/// every non-empty node pulls k−1 values and scores a hit if all equal its
/// own; the hit total is summed by push-sum.
pub fn fk_estimate<S>(sampler: &mut S, vals: &ValueAssignment, k: u32, epsilon: f64, seed: u64, consts: &Constants) -> Result<FkOutcome>
where
    S: PartnerSampler + ?Sized,
{
    if k < 2 {
        return Err(invalid("F_k estimation needs k >= 2"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    let n = vals.n();
    let phases = (consts.c_fk / (epsilon * epsilon) * log2n(n) as f64).ceil() as u64;
    let per = k as u64 - 1;
    let mut nodes: Vec<Collide> = (0..n).map(|v| Collide { own: vals.get(v), pulls_per_phase: per, phases, matches: 0, hits: 0 }).collect();
    let mut runs = Runs::new(n, vals.universe(), seed, consts);
    let mut stats = runs.run(sampler, &mut nodes, phases * per + 1, "F_k collision phases")?;
    let hits: Vec<u64> = nodes.iter().map(|c| c.hits).collect();
    let max_sum = n as u64 * phases;
    let total = push_sum(sampler, &hits, max_sum, push_sum_rounds(n, max_sum, consts), derive(seed, &[1]), consts)?;
    stats.absorb(&total.stats);
    let hits = total.rounded(0);
    let estimate = (n as f64).powi(k as i32 - 1) * hits as f64 / phases as f64;
    Ok(FkOutcome { estimate, phases, hits, stats })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpParams {
    pub p: u32,
    pub k: u32,
    pub epsilon: f64,
    /// Apply duplication first and divide the result by factor^p.
    #[serde(default = "yes")]
    pub preprocess: bool,
}

fn yes() -> bool {
    true
}

/// (groups, estimators per group): ⌈log₂ n⌉ made odd, and R = ⌈c_est·n^(1−k/p)·ε⁻²⌉.
pub fn fp_group_shape(n: usize, params: &FpParams, consts: &Constants) -> (usize, usize) {
    let exponent = 1.0 - params.k as f64 / params.p as f64;
    let r = (consts.c_est * (n as f64).powf(exponent) / (params.epsilon * params.epsilon)).ceil().max(1.0) as usize;
    (force_odd(log2n(n) as usize), r)
}

/// ℓ_k samples with their exact frequencies and the estimators Z_r.
#[derive(Clone, Debug, Default)]
pub struct ZDraws {
    /// (sampled value, its frequency as counted by push-sum).
    pub samples: Vec<(u64, u64)>,
    pub z: Vec<f64>,
    pub stats: RoundStats,
}

/// Draws `count` estimators Z_r = fk·f_{i_r}^(p−k), where i_r is an ℓ_k sample
/// and f_{i_r} comes from an indicator push-sum (once per distinct value).
pub fn z_estimators<S>(
    sampler: &mut S,
    vals: &ValueAssignment,
    p: u32,
    k: u32,
    fk: f64,
    count: usize,
    seed: u64,
    consts: &Constants,
) -> Result<ZDraws>
where
    S: PartnerSampler + ?Sized,
{
    let n = vals.n();
    let rounds = push_sum_rounds(n, n as u64, consts);
    let mut freq: BTreeMap<u64, u64> = BTreeMap::new();
    let mut out = ZDraws::default();
    for r in 0..count {
        let s = lp_sample(sampler, vals, k, derive(seed, &[2, r as u64]), consts)?;
        out.stats.absorb(&s.stats);
        let f = match freq.get(&s.value) {
            Some(&f) => f,
            None => {
                let ind: Vec<u64> = (0..n).map(|v| u64::from(vals.get(v) == Some(s.value))).collect();
                let c = push_sum(sampler, &ind, n as u64, rounds, derive(seed, &[3, s.value]), consts)?;
                out.stats.absorb(&c.stats);
                *freq.entry(s.value).or_insert(c.rounded(0))
            }
        };
        out.samples.push((s.value, f));
        out.z.push(fk * (f as f64).powi((p - k) as i32));
    }
    Ok(out)
}

/// F̂_p with its pieces.
#[derive(Clone, Debug)]
pub struct FpOutcome {
    pub estimate: f64,
    pub fk: f64,
    pub dup_factor: u64,
    pub groups: usize,
    pub per_group: usize,
    pub group_means: Vec<f64>,
    pub draws: ZDraws,
    pub stats: RoundStats,
}

/// F̂_p as the median over groups of the mean of Z_r = F̂_k·f_{i_r}^(p−k),
/// divided by factor^p when duplication rescaled the frequencies.
pub fn fp_estimate<S>(sampler: &mut S, vals: &ValueAssignment, params: &FpParams, seed: u64, consts: &Constants) -> Result<FpOutcome>
where
    S: PartnerSampler + ?Sized,
{
    let FpParams { p, k, epsilon, preprocess } = *params;
    if k < 2 || k > p {
        return Err(invalid(format!("F_p estimation needs 2 <= k <= p, got k = {k}, p = {p}")));
    }
    let n = vals.n();
    let mut stats = RoundStats::default();
    let (work, dup_factor) = if preprocess {
        let d = preprocess_duplicate(sampler, vals, derive(seed, &[4]), consts)?;
        stats.absorb(&d.stats);
        (d.vals, d.factor)
    } else {
        (vals.clone(), 1)
    };
    let fk = fk_estimate(sampler, &work, k, epsilon, derive(seed, &[5]), consts)?;
    stats.absorb(&fk.stats);
    let (groups, per_group) = fp_group_shape(n, params, consts);
    let draws = z_estimators(sampler, &work, p, k, fk.estimate, groups * per_group, derive(seed, &[6]), consts)?;
    stats.absorb(&draws.stats);
    let scale = (dup_factor as f64).powi(p as i32);
    let group_means: Vec<f64> = draws.z.chunks(per_group).map(|c| c.iter().sum::<f64>() / c.len() as f64 / scale).collect();
    let mut sorted = group_means.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let estimate = sorted[(sorted.len() - 1) / 2];
    Ok(FpOutcome { estimate, fk: fk.estimate / (dup_factor as f64).powi(k as i32), dup_factor, groups, per_group, group_means, draws, stats })
}
