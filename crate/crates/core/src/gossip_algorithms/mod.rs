//! GOSSIP-model algorithms: push-sum counting, value duplication, ℓ0 and
//! ℓp samplers, and frequency-moment estimators. All of them take a
//! partner sampler, so they run unchanged on the ideal or the emulated engine.

mod duplicate;
mod moments;
mod push_sum;
mod samplers;

pub use duplicate::{preprocess_duplicate, Duplication};
pub use moments::{fk_estimate, fp_estimate, fp_group_shape, z_estimators, FkOutcome, FpOutcome, FpParams, ZDraws};
pub use push_sum::{push_sum, push_sum_rounds, PushSum};
pub use samplers::{diffusion_budget, l0_sample, lp_sample, LpSample};

use crate::constants::Constants;
use crate::engines::{run_gossip, BitCost, GossipConfig, GossipProgram, PartnerSampler, RoundStats};
use crate::error::Result;
use crate::rng::{derive, tag};

/// Hands out a fresh node-randomness seed for each engine run of one algorithm.
pub(crate) struct Runs {
    base: GossipConfig,
    count: u64,
}

impl Runs {
    pub(crate) fn new(n: usize, universe: u64, seed: u64, consts: &Constants) -> Self {
        Self { base: GossipConfig::new(seed, BitCost::new(n, universe, consts.c0)), count: 0 }
    }

    pub(crate) fn next(&mut self) -> GossipConfig {
        self.count += 1;
        self.base.with_seed(derive(self.base.seed, &[tag::PHASE, self.count]))
    }

    /// Runs `nodes` to completion, failing if `cap` rounds do not suffice.
    pub(crate) fn run<P, S>(&mut self, sampler: &mut S, nodes: &mut [P], cap: u64, what: &'static str) -> Result<RoundStats>
    where
        P: GossipProgram,
        S: PartnerSampler + ?Sized,
    {
        let cfg = self.next().with_round_cap(cap);
        let stats = run_gossip(sampler, nodes, &cfg)?;
        stats.ensure_complete(what, cap)?;
        Ok(stats)
    }
}
