use crate::engines::RoundStats;
use crate::graph::Graph;
use crate::rng::{node_rng, tag};
use rand::Rng;
use std::collections::VecDeque;

/// First directed-edge index of each node; edge offsets[u] + j leads to the
/// j-th neighbor of u. The same numbering indexes compartments.
pub fn edge_offsets(g: &Graph) -> Vec<usize> {
    let mut off = Vec::with_capacity(g.n() + 1);
    let mut acc = 0;
    for v in 0..g.n() {
        off.push(acc);
        acc += g.degree(v);
    }
    off.push(acc);
    off
}

/// Result of a batch of parallel walks.
#[derive(Clone, Debug)]
pub struct WalkOutcome {
    pub trajectories: Vec<Vec<usize>>,
    /// Round in which each walk took its last step (0 for empty walks).
    pub arrival: Vec<u64>,
    pub stats: RoundStats,
}

/// Runs lazy random walks in parallel. Each walk draws its next step from
/// its own stream, so trajectories do not depend on scheduling; moves queue
/// FIFO on directed edges that carry one token per round, and a stay step
/// uses up a round.
pub fn parallel_random_walks(g: &Graph, walks: &[(usize, usize)], seed: u64) -> WalkOutcome {
    let mut trajectories: Vec<Vec<usize>> = walks.iter().map(|&(s, _)| vec![s]).collect();
    let steps: Vec<usize> = walks.iter().map(|w| w.1).collect();
    let keys: Vec<u64> = (0..walks.len() as u64).collect();
    let (arrival, stats) = extend_walks(g, &mut trajectories, &steps, &keys, seed);
    WalkOutcome { trajectories, arrival, stats }
}

/// Extends each trajectory by `steps[i]` lazy steps from its last node,
/// drawing from the stream keyed by `keys[i]`.
pub(crate) fn extend_walks(g: &Graph, trajectories: &mut [Vec<usize>], steps: &[usize], keys: &[u64], seed: u64) -> (Vec<u64>, RoundStats) {
    let k = trajectories.len();
    let off = edge_offsets(g);
    let mut rngs: Vec<_> = keys.iter().map(|&i| node_rng(seed, &[tag::WALK, i])).collect();
    let mut remaining = steps.to_vec();
    let mut arrival = vec![0u64; k];
    let mut free: Vec<usize> = (0..k).filter(|&i| remaining[i] > 0).collect();
    let mut queues: Vec<VecDeque<usize>> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut stats = RoundStats::default();
    let mut round = 0u64;
    let mut pending = free.len();
    let mut next_free = Vec::new();
    while pending > 0 {
        round += 1;
        let mut moved = 0u64;
        for &i in &free {
            let pos = *trajectories[i].last().unwrap();
            let d = g.degree(pos);
            let x = rngs[i].gen_range(0..2 * d);
            if x < d {
                trajectories[i].push(pos);
                remaining[i] -= 1;
                if remaining[i] == 0 {
                    arrival[i] = round;
                    pending -= 1;
                } else {
                    next_free.push(i);
                }
            } else {
                if queues.is_empty() {
                    queues = vec![VecDeque::new(); off[g.n()]];
                }
                let e = off[pos] + (x - d);
                if queues[e].is_empty() {
                    active.push(e);
                }
                queues[e].push_back(i);
            }
        }
        let mut still = Vec::new();
        for &e in &active {
            stats.max_edge_congestion = stats.max_edge_congestion.max(queues[e].len() as u64);
            let i = queues[e].pop_front().unwrap();
            let pos = *trajectories[i].last().unwrap();
            let to = g.neighbors(pos)[e - off[pos]];
            trajectories[i].push(to);
            moved += 1;
            remaining[i] -= 1;
            if remaining[i] == 0 {
                arrival[i] = round;
                pending -= 1;
            } else {
                next_free.push(i);
            }
            if !queues[e].is_empty() {
                still.push(e);
            }
        }
        active = still;
        std::mem::swap(&mut free, &mut next_free);
        next_free.clear();
        if moved > 0 {
            stats.per_round_message_counts.resize(round as usize - 1, 0);
            stats.per_round_message_counts.push(moved);
            stats.messages_sent += moved;
        }
    }
    stats.rounds = round;
    stats.executed_rounds = round;
    stats.per_round_message_counts.resize(round as usize, 0);
    (arrival, stats)
}

/// Sends one packet along each path (repeated nodes are waits and are
/// skipped), one packet per directed edge per round with FIFO queues.
/// Returns each packet's arrival round.
pub fn replay_paths(g: &Graph, paths: &[Vec<usize>]) -> (Vec<u64>, RoundStats) {
    let off = edge_offsets(g);
    let hops: Vec<Vec<usize>> = paths
        .iter()
        .map(|p| {
            let mut h: Vec<usize> = Vec::with_capacity(p.len());
            for &v in p {
                if h.last() != Some(&v) {
                    h.push(v);
                }
            }
            h
        })
        .collect();
    let mut at = vec![0usize; hops.len()];
    let mut arrival = vec![0u64; hops.len()];
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); off[g.n()]];
    let mut active = Vec::new();
    let enqueue = |i: usize, at: &[usize], queues: &mut Vec<VecDeque<usize>>, active: &mut Vec<usize>| {
        let (u, w) = (hops[i][at[i]], hops[i][at[i] + 1]);
        let e = off[u] + g.neighbor_slot(u, w).expect("replayed path leaves the graph");
        if queues[e].is_empty() {
            active.push(e);
        }
        queues[e].push_back(i);
    };
    for i in 0..hops.len() {
        if hops[i].len() > 1 {
            enqueue(i, &at, &mut queues, &mut active);
        }
    }
    let mut stats = RoundStats::default();
    let mut round = 0u64;
    while !active.is_empty() {
        round += 1;
        let mut moving = Vec::with_capacity(active.len());
        for &e in &active {
            stats.max_edge_congestion = stats.max_edge_congestion.max(queues[e].len() as u64);
            moving.push(queues[e].pop_front().unwrap());
        }
        let mut still: Vec<usize> = active.iter().copied().filter(|&e| !queues[e].is_empty()).collect();
        for &i in &moving {
            at[i] += 1;
            if at[i] + 1 == hops[i].len() {
                arrival[i] = round;
            } else {
                enqueue(i, &at, &mut queues, &mut still);
            }
        }
        active = still;
        stats.messages_sent += moving.len() as u64;
        stats.per_round_message_counts.push(moving.len() as u64);
    }
    stats.rounds = round;
    stats.executed_rounds = round;
    (arrival, stats)
}
