use super::walks::{edge_offsets, extend_walks, replay_paths};
use crate::constants::{ceil_log2, log2n};
use crate::engines::RoundStats;
use crate::error::{invalid, Error, Result};
use crate::graph::{mixing_profile, Graph};
use crate::rng::{derive, node_rng, tag};
use rand::Rng;
use std::collections::HashMap;

/// Slot `slot` of node `node`; node u has deg(u) compartments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Compartment {
    pub node: usize,
    pub slot: usize,
}

/// A placed destination token and the walk that brought it from its owner.
#[derive(Clone, Debug)]
pub struct DestToken {
    pub owner: usize,
    pub compartment: usize,
    pub trajectory: Vec<usize>,
}

/// Destination-token placement plus the walk lengths used by every
/// emulated round.
#[derive(Clone, Debug)]
pub struct EmulationState {
    pub n: usize,
    pub m: usize,
    /// k = ⌊1.5m/n⌋ destination tokens per node.
    pub dest_per_node: usize,
    pub lambda: f64,
    /// λ′ = min(λ/(8m), 0.1/m).
    pub lambda_prime: f64,
    pub tau_mix: usize,
    /// τ(0.1/(2m)), the distributing walk length.
    pub tau_distribute: usize,
    /// τ(λ′), the source walk length.
    pub tau_source: usize,
    pub offsets: Vec<usize>,
    /// Destination token held by each compartment.
    pub occupant: Vec<Option<usize>>,
    pub dest: Vec<DestToken>,
    pub splitting_stages: usize,
    pub distribute_trials: usize,
    pub stats: RoundStats,
}

impl EmulationState {
    pub fn compartments(&self) -> usize {
        self.occupant.len()
    }

    pub fn compartment(&self, c: usize) -> Compartment {
        let node = self.offsets.partition_point(|&o| o <= c) - 1;
        Compartment { node, slot: c - self.offsets[node] }
    }

    pub fn index(&self, c: Compartment) -> usize {
        self.offsets[c.node] + c.slot
    }

    /// At most one token per compartment, n·k tokens, consistent back-references,
    /// and every trajectory a walk from its owner to its compartment's node.
    pub fn placement_is_valid(&self, g: &Graph) -> bool {
        let held = self.occupant.iter().flatten().count();
        held == self.dest.len()
            && self.dest.len() == self.n * self.dest_per_node
            && self.dest.iter().enumerate().all(|(i, d)| {
                self.occupant[d.compartment] == Some(i)
                    && d.trajectory.first() == Some(&d.owner)
                    && d.trajectory.last() == Some(&self.compartment(d.compartment).node)
                    && d.trajectory.windows(2).all(|w| w[0] == w[1] || g.has_edge(w[0], w[1]))
            })
    }
}

/// Attempt cap for distributing trials and source-walk retries.
pub fn trial_cap(n: usize) -> usize {
    50 * log2n(n) as usize
}

/// Places n·⌊1.5m/n⌋ destination tokens, at most one per compartment.
/// Splitting: ⌈log₂ k⌉ stages of halving multiplicities followed by a
/// τ-step walk of every token. Distributing: tokens sharing a compartment
/// keep the earliest arrival and relaunch the rest on τ(0.1/(2m))-step walks;
/// a walk succeeds only if it ends alone in an empty compartment, otherwise
/// the token walks its segment back and retries.
pub fn emulate_setup(g: &Graph, lambda: f64, seed: u64) -> Result<EmulationState> {
    let (n, m) = (g.n(), g.m());
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("lambda must be in (0, 1], got {lambda}")));
    }
    let k = 3 * m / (2 * n);
    if m < 4 || k == 0 {
        return Err(invalid(format!("emulation needs m >= 4 and 1.5m >= n (n = {n}, m = {m})")));
    }
    let lambda_prime = (lambda / (8.0 * m as f64)).min(0.1 / m as f64);
    let profile = mixing_profile(g, &[0.1 / (2.0 * m as f64), lambda_prime])?;
    let (tau_mix, tau_distribute, tau_source) = (profile.tau_exact, profile.tau_at[0].1, profile.tau_at[1].1);
    let offsets = edge_offsets(g);
    let mut stats = RoundStats::default();
    let mut phase = 0u64;
    let mut next_seed = || {
        phase += 1;
        derive(seed, &[tag::WALK, phase])
    };

    let mut weight: Vec<usize> = vec![k; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let mut trajs: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    let mut arrival = vec![0u64; n];
    let stages = ceil_log2(k as u128) as usize;
    for _ in 0..stages {
        for i in 0..weight.len() {
            if weight[i] > 1 {
                let half = weight[i] / 2;
                weight[i] -= half;
                weight.push(half);
                owner.push(owner[i]);
                trajs.push(trajs[i].clone());
            }
        }
        let keys: Vec<u64> = (0..trajs.len() as u64).collect();
        let steps = vec![tau_mix; trajs.len()];
        let (arr, s) = extend_walks(g, &mut trajs, &steps, &keys, next_seed());
        arrival = arr;
        stats.absorb(&s);
    }
    debug_assert!(weight.iter().all(|&w| w == 1) && weight.len() == n * k);
    let total = trajs.len();
    arrival.resize(total, 0);

    let land = |trajs: &[Vec<usize>], i: usize, trial: u64| {
        let v = *trajs[i].last().unwrap();
        offsets[v] + node_rng(seed, &[tag::SLOT, trial, i as u64]).gen_range(0..g.degree(v))
    };
    let mut occupant: Vec<Option<usize>> = vec![None; 2 * m];
    let mut first: HashMap<usize, usize> = HashMap::new();
    for i in 0..total {
        let c = land(&trajs, i, 0);
        let e = first.entry(c).or_insert(i);
        if (arrival[i], i) < (arrival[*e], *e) {
            *e = i;
        }
    }
    let mut placed: Vec<Option<usize>> = vec![None; total];
    for (&c, &i) in &first {
        occupant[c] = Some(i);
        placed[i] = Some(c);
    }
    let mut unsettled: Vec<usize> = (0..total).filter(|&i| placed[i].is_none()).collect();

    let cap = trial_cap(n);
    let mut trials = 0;
    while !unsettled.is_empty() {
        trials += 1;
        if trials > cap {
            return Err(Error::CapExceeded { what: "destination-token distribution trials", cap: cap as u64 });
        }
        let starts: Vec<usize> = unsettled.iter().map(|&i| trajs[i].len() - 1).collect();
        let mut batch: Vec<Vec<usize>> = unsettled.iter().map(|&i| std::mem::take(&mut trajs[i])).collect();
        let keys: Vec<u64> = unsettled.iter().map(|&i| i as u64).collect();
        let steps = vec![tau_distribute; batch.len()];
        let (_, s) = extend_walks(g, &mut batch, &steps, &keys, next_seed());
        stats.absorb(&s);
        for (&i, t) in unsettled.iter().zip(batch) {
            trajs[i] = t;
        }
        let landing: Vec<usize> = unsettled.iter().map(|&i| land(&trajs, i, trials as u64)).collect();
        let mut hits: HashMap<usize, usize> = HashMap::new();
        for &c in &landing {
            *hits.entry(c).or_default() += 1;
        }
        let mut failed = Vec::new();
        let mut back = Vec::new();
        for ((&i, &c), &start) in unsettled.iter().zip(&landing).zip(&starts) {
            if occupant[c].is_none() && hits[&c] == 1 {
                occupant[c] = Some(i);
                placed[i] = Some(c);
            } else {
                let segment: Vec<usize> = trajs[i][start..].iter().rev().copied().collect();
                trajs[i].extend_from_slice(&segment[1..]);
                back.push(segment);
                failed.push(i);
            }
        }
        let (_, s) = replay_paths(g, &back);
        stats.absorb(&s);
        unsettled = failed;
    }

    let mut remap = vec![usize::MAX; total];
    let mut dest = Vec::with_capacity(total);
    for (c, slot) in occupant.iter_mut().enumerate() {
        if let Some(i) = *slot {
            remap[i] = dest.len();
            dest.push(DestToken { owner: owner[i], compartment: c, trajectory: std::mem::take(&mut trajs[i]) });
            *slot = Some(remap[i]);
        }
    }
    Ok(EmulationState {
        n,
        m,
        dest_per_node: k,
        lambda,
        lambda_prime,
        tau_mix,
        tau_distribute,
        tau_source,
        offsets,
        occupant,
        dest,
        splitting_stages: stages,
        distribute_trials: trials,
        stats,
    })
}
