//! Deterministic randomness streams keyed by (seed, purpose, indices).

use rand::SeedableRng;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Cheap per-node, per-round generator.
pub type NodeRng = SplitMix64;

/// Longer-lived generator for leaders and whole-run draws.
pub type RunRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed together with any number of stream coordinates.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(finalize(seed.wrapping_add(GOLDEN)), |acc, &p| {
        finalize(acc ^ finalize(p.wrapping_add(GOLDEN)))
    })
}

pub fn node_rng(seed: u64, parts: &[u64]) -> NodeRng {
    NodeRng::seed_from_u64(derive(seed, parts))
}

pub fn run_rng(seed: u64, parts: &[u64]) -> RunRng {
    RunRng::seed_from_u64(derive(seed, parts))
}

/// Stream tags keeping unrelated draws apart.
pub mod tag {
    pub const NODE: u64 = 1;
    pub const PARTNER: u64 = 2;
    pub const LEADER: u64 = 3;
    pub const WALK: u64 = 4;
    pub const SLOT: u64 = 5;
    pub const PHASE: u64 = 6;
    pub const INSTANCE: u64 = 7;
    pub const GRAPH: u64 = 8;
}
