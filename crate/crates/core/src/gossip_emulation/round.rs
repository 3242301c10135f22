use super::setup::{emulate_setup, trial_cap, EmulationState};
use super::walks::{extend_walks, replay_paths};
use crate::engines::{PartnerSampler, RoundStats};
use crate::error::{Error, Result};
use crate::graph::{walk_matrix, Graph};
use crate::rng::{derive, node_rng, tag};
use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

/// Step-2 outcome: the partner of every node and the walks that found it.
#[derive(Clone, Debug)]
pub struct SourceWalks {
    pub partner: Vec<usize>,
    /// Destination token each source token stopped on.
    pub matched: Vec<usize>,
    pub trajectories: Vec<Vec<usize>>,
    pub attempts: Vec<usize>,
    pub stats: RoundStats,
}

/// Every node launches a source token on τ(λ′)-step walks, continuing from
/// where the last attempt ended, until it lands in a compartment holding a
/// destination token; the token's owner becomes the partner.
pub fn source_walks(g: &Graph, state: &EmulationState, seed: u64) -> Result<SourceWalks> {
    let n = g.n();
    let mut trajectories: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    let mut matched = vec![usize::MAX; n];
    let mut attempts = vec![0usize; n];
    let mut pending: Vec<usize> = (0..n).collect();
    let mut stats = RoundStats::default();
    let cap = trial_cap(n);
    for attempt in 1..=cap {
        let mut batch: Vec<Vec<usize>> = pending.iter().map(|&u| std::mem::take(&mut trajectories[u])).collect();
        let keys: Vec<u64> = pending.iter().map(|&u| u as u64).collect();
        let steps = vec![state.tau_source; batch.len()];
        let (_, s) = extend_walks(g, &mut batch, &steps, &keys, derive(seed, &[tag::WALK, attempt as u64]));
        stats.absorb(&s);
        let mut still = Vec::new();
        for (&u, t) in pending.iter().zip(batch) {
            let v = *t.last().unwrap();
            trajectories[u] = t;
            attempts[u] = attempt;
            let slot = node_rng(seed, &[tag::SLOT, attempt as u64, u as u64]).gen_range(0..g.degree(v));
            match state.occupant[state.offsets[v] + slot] {
                Some(d) => matched[u] = d,
                None => still.push(u),
            }
        }
        pending = still;
        if pending.is_empty() {
            let partner = matched.iter().map(|&d| state.dest[d].owner).collect();
            return Ok(SourceWalks { partner, matched, trajectories, attempts, stats });
        }
    }
    Err(Error::CapExceeded { what: "source-token walk attempts", cap: cap as u64 })
}

/// Route of a message from u to t(u): u's source walk, then the matched
/// destination token's walk backwards to its owner.
pub fn message_path(state: &EmulationState, walks: &SourceWalks, u: usize) -> Vec<usize> {
    let mut path = walks.trajectories[u].clone();
    path.extend(state.dest[walks.matched[u]].trajectory.iter().rev().skip(1));
    path
}

/// One emulated GOSSIP round.
#[derive(Clone, Debug)]
pub struct EmulatedRound {
    pub walks: SourceWalks,
    /// (sender, node the packet reached) for every request, in request order;
    /// for a PULL the reply's arrival at the requester.
    pub delivered: Vec<(usize, usize)>,
    pub step2: RoundStats,
    pub step3: RoundStats,
}

impl EmulatedRound {
    pub fn rounds(&self) -> u64 {
        self.step2.rounds + self.step3.rounds
    }
}

/// Step 2 for every node, then Step 3 for each request (node, is_pull):
/// packets replay their paths with per-edge capacity; a PULL's reply
/// replays the path backwards in a second batch.
pub fn emulate_round(g: &Graph, state: &EmulationState, requests: &[(usize, bool)], seed: u64) -> Result<EmulatedRound> {
    let walks = source_walks(g, state, seed)?;
    let paths: Vec<Vec<usize>> = requests.iter().map(|&(u, _)| message_path(state, &walks, u)).collect();
    let (_, mut step3) = replay_paths(g, &paths);
    let replies: Vec<Vec<usize>> = requests
        .iter()
        .zip(&paths)
        .filter(|((_, pull), _)| *pull)
        .map(|(_, p)| p.iter().rev().copied().collect())
        .collect();
    let (_, back) = replay_paths(g, &replies);
    step3.absorb(&back);
    let delivered = requests
        .iter()
        .zip(&paths)
        .map(|(&(u, pull), p)| (u, if pull { p[0] } else { *p.last().unwrap() }))
        .collect();
    let step2 = walks.stats.clone();
    Ok(EmulatedRound { walks, delivered, step2, step3 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmulationMode {
    /// Every walk and replay is simulated with edge capacities.
    Physical,
    /// Walk endpoints are drawn from the exact τ(λ′)-step distribution, which
    /// gives the same partner law; rounds are charged as uncongested path lengths.
    Endpoint,
}

/// GOSSIP(λ) partners produced by emulation over a CONGEST graph.
pub struct EmulatedPartners {
    g: Graph,
    state: EmulationState,
    mode: EmulationMode,
    seed: u64,
    epoch: u64,
    charged: u64,
    emulated_rounds: u64,
    max_round_charge: u64,
    rows: Vec<WeightedAliasIndex<f64>>,
}

impl EmulatedPartners {
    pub fn new(g: &Graph, lambda: f64, seed: u64, mode: EmulationMode) -> Result<Self> {
        let state = emulate_setup(g, lambda, derive(seed, &[tag::PHASE, 0]))?;
        let charged = state.stats.rounds;
        let rows = match mode {
            EmulationMode::Physical => Vec::new(),
            EmulationMode::Endpoint => {
                let n = g.n();
                let p = walk_matrix(g, state.tau_source);
                (0..n)
                    .map(|u| WeightedAliasIndex::new(p[u * n..(u + 1) * n].iter().map(|x| x.max(0.0)).collect()))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| crate::error::invalid(format!("walk distribution: {e}")))?
            }
        };
        Ok(Self { g: g.clone(), state, mode, seed, epoch: 0, charged, emulated_rounds: 0, max_round_charge: 0, rows })
    }

    pub fn state(&self) -> &EmulationState {
        &self.state
    }

    /// Rounds spent on the one-time destination-token placement.
    pub fn setup_rounds(&self) -> u64 {
        self.state.stats.rounds
    }

    pub fn emulated_rounds(&self) -> u64 {
        self.emulated_rounds
    }

    /// Largest number of CONGEST rounds charged for one emulated round.
    pub fn max_round_charge(&self) -> u64 {
        self.max_round_charge
    }

    fn endpoint_partner<R: Rng>(&self, u: usize, rng: &mut R) -> Result<(usize, usize)> {
        let mut at = u;
        for attempt in 1..=trial_cap(self.g.n()) {
            let v = self.rows[at].sample(rng);
            let slot = rng.gen_range(0..self.g.degree(v));
            if let Some(d) = self.state.occupant[self.state.offsets[v] + slot] {
                return Ok((d, attempt));
            }
            at = v;
        }
        Err(Error::CapExceeded { what: "source-token walk attempts", cap: trial_cap(self.g.n()) as u64 })
    }
}

impl PartnerSampler for EmulatedPartners {
    fn n(&self) -> usize {
        self.g.n()
    }

    fn draw(&mut self, round: u64, requesters: &[(usize, bool)], out: &mut Vec<usize>) -> Result<()> {
        let seed = derive(self.seed, &[tag::PARTNER, self.epoch, round]);
        out.clear();
        let charge = match self.mode {
            EmulationMode::Physical => {
                let r = emulate_round(&self.g, &self.state, requesters, seed)?;
                out.extend(requesters.iter().map(|&(u, _)| r.walks.partner[u]));
                r.rounds()
            }
            EmulationMode::Endpoint => {
                let mut rng = node_rng(seed, &[]);
                let tau = self.state.tau_source as u64;
                let mut walk = 0u64;
                let mut route = 0u64;
                for &(u, pull) in requesters {
                    let (d, attempts) = self.endpoint_partner(u, &mut rng)?;
                    out.push(self.state.dest[d].owner);
                    walk = walk.max(attempts as u64 * tau);
                    let len = attempts as u64 * tau + self.state.dest[d].trajectory.len() as u64 - 1;
                    route = route.max(if pull { 2 * len } else { len });
                }
                walk + route
            }
        };
        self.charged += charge;
        self.emulated_rounds += 1;
        self.max_round_charge = self.max_round_charge.max(charge);
        Ok(())
    }

    fn charged_rounds(&self) -> u64 {
        self.charged
    }

    fn begin_run(&mut self) {
        self.epoch += 1;
    }
}
