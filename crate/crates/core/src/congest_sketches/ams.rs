use super::{estimate_word, median, SketchOutcome};
use crate::constants::{force_odd, log2n, Constants};
use crate::engines::{bits_for, run_congest, BitCost, CongestConfig, CongestProgram, Control, Ctx, Payload};
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::primitives::{aggregate_vector, broadcast_items, broadcast_words, convergecast, elect_leader_and_ids, gather_to_root};
use crate::rng::{derive, run_rng, tag};
use crate::values::ValueAssignment;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmsParams {
    pub p: u32,
    pub epsilon: f64,
    /// Number of median groups; defaults to ⌈log₂ n⌉ made odd.
    #[serde(default)]
    pub median_width: Option<usize>,
}

/// Total sampled positions s = ⌈c_ams·ε⁻²·min(n, N)^(1−1/p)·log₂ n⌉, and
/// the (groups, per group) split with groups·per_group ≥ s.
pub fn ams_repetitions(params: &AmsParams, n: usize, universe: u64, consts: &Constants) -> (usize, usize) {
    let p = params.p as f64;
    let base = (n as f64).min(universe as f64);
    let s = (consts.c_ams / (params.epsilon * params.epsilon) * base.powf(1.0 - 1.0 / p) * log2n(n) as f64).ceil().max(1.0) as usize;
    let groups = params.median_width.unwrap_or_else(|| force_odd(log2n(n) as usize));
    (groups, s.div_ceil(groups))
}

fn ams_value(f1: u64, r: u64, p: u32) -> f64 {
    let r = r as f64;
    f1 as f64 * (r.powi(p as i32) - (r - 1.0).powi(p as i32))
}

/// One AMS estimate F1·(r^p − (r−1)^p), with v a uniform non-empty node and r
/// the number of nodes u with the same value and order[u] ≥ order[v].
pub fn ams_single_estimate<R: Rng + ?Sized>(vals: &ValueAssignment, order: &[usize], p: u32, rng: &mut R) -> Option<f64> {
    let holders: Vec<usize> = (0..vals.n()).filter(|&v| vals.get(v).is_some()).collect();
    let &v = holders.get(rng.gen_range(0..holders.len().max(1)))?;
    let x = vals.get(v);
    let r = holders.iter().filter(|&&u| vals.get(u) == x && order[u] >= order[v]).count() as u64;
    Some(ams_value(holders.len() as u64, r, p))
}

#[derive(Clone, Copy)]
struct Descend {
    rep: u32,
    rank: u64,
    rep_bits: u32,
}

impl Payload for Descend {
    fn bits(&self, c: &BitCost) -> u32 {
        self.rep_bits + bits_for(c.n as u128)
    }
}

struct DescendNode {
    own: u64,
    children: Vec<(usize, u64)>,
    queues: Vec<VecDeque<Descend>>,
    local: Vec<Descend>,
    sampled: Vec<u32>,
}

impl DescendNode {
    fn place(&mut self, mut d: Descend) {
        if self.own == 1 && d.rank == 1 {
            self.sampled.push(d.rep);
            return;
        }
        d.rank -= self.own;
        for (i, &(_, c)) in self.children.iter().enumerate() {
            if d.rank <= c {
                self.queues[i].push_back(d);
                return;
            }
            d.rank -= c;
        }
        unreachable!("rank exceeds subtree count");
    }
}

impl CongestProgram for DescendNode {
    type Msg = Descend;
    fn step(&mut self, ctx: &mut Ctx<'_, Descend>) -> Control {
        let incoming: Vec<Descend> = self.local.drain(..).chain(ctx.take_inbox().map(|(_, d)| d)).collect();
        for d in incoming {
            self.place(d);
        }
        let mut busy = false;
        for (i, q) in self.queues.iter_mut().enumerate() {
            ctx.note_queue(q.len());
            if let Some(d) = q.pop_front() {
                ctx.send(self.children[i].0, d);
            }
            busy |= !q.is_empty();
        }
        if busy {
            Control::Continue
        } else {
            Control::Idle
        }
    }
}

#[derive(Clone, Copy)]
struct Sample {
    rep: u32,
    id: usize,
    value: u64,
    rep_bits: u32,
}

impl Payload for Sample {
    fn bits(&self, c: &BitCost) -> u32 {
        self.rep_bits + c.node_id() + c.value()
    }
}

#[derive(Clone)]
struct Packed(Vec<(usize, u64)>);

impl Payload for Packed {
    fn bits(&self, c: &BitCost) -> u32 {
        self.0.len() as u32 * (c.node_id() + c.value())
    }
}

/// F_p estimate by AMS sampling: subtree counts of non-empty nodes are
/// convergecast, the root descends the tree with uniform ranks to pick one
/// sampled node per repetition, the samples are gathered and broadcast,
/// and every r is obtained in one pipelined vector aggregation of the
/// indicators [id(u) ≥ id(v) and val(u) = val(v)].
pub fn fp_ams_estimate(
    g: &Graph,
    vals: &ValueAssignment,
    params: &AmsParams,
    seed: u64,
    consts: &Constants,
) -> Result<SketchOutcome> {
    if params.p < 1 {
        return Err(invalid("AMS needs p >= 1"));
    }
    if !(params.epsilon > 0.0 && params.epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must be in (0, 1], got {}", params.epsilon)));
    }
    let n = g.n();
    let cost = BitCost::new(n, vals.universe(), consts.c0);
    let cfg = CongestConfig::new(derive(seed, &[tag::PHASE, 0]), cost);
    let setup = elect_leader_and_ids(g, &cfg)?;
    let mut stats = setup.stats.clone();
    let tree = &setup.tree;
    let root = tree.root();

    let indicator: Vec<i128> = (0..n).map(|v| i128::from(vals.get(v).is_some())).collect();
    let counts = convergecast(g, tree, &indicator, n as u128, false, &cfg)?;
    stats.absorb(&counts.stats);
    let f1 = counts.total as u64;
    if f1 == 0 {
        return Err(Error::EmptyInput("AMS sampling needs a non-empty node"));
    }

    let (groups, per_group) = ams_repetitions(params, n, vals.universe(), consts);
    let reps = groups * per_group;
    let rep_bits = bits_for(reps as u128);
    let mut rng = run_rng(seed, &[tag::LEADER, 0]);
    let mut nodes: Vec<DescendNode> = (0..n)
        .map(|v| {
            let children: Vec<(usize, u64)> = counts.child_sums[v].iter().map(|&(c, s)| (c, s as u64)).collect();
            DescendNode {
                own: indicator[v] as u64,
                queues: vec![VecDeque::new(); children.len()],
                children,
                local: Vec::new(),
                sampled: Vec::new(),
            }
        })
        .collect();
    nodes[root].local = (0..reps).map(|r| Descend { rep: r as u32, rank: rng.gen_range(1..=f1), rep_bits }).collect();
    stats.absorb(&run_congest(g, &mut nodes, &cfg)?);

    let samples: Vec<Vec<Sample>> = nodes
        .iter()
        .enumerate()
        .map(|(v, d)| {
            let value = vals.get(v).unwrap_or(0);
            d.sampled.iter().map(|&rep| Sample { rep, id: setup.ids[v], value, rep_bits }).collect()
        })
        .collect();
    let (mut gathered, gstats) = gather_to_root(g, tree, samples, &cfg)?;
    stats.absorb(&gstats);
    gathered.sort_by_key(|s| s.rep);
    debug_assert_eq!(gathered.len(), reps);

    let per_msg = ((cost.budget() / (cost.node_id() + cost.value())) as usize).max(1);
    let packed: Vec<Packed> = gathered.chunks(per_msg).map(|c| Packed(c.iter().map(|s| (s.id, s.value)).collect())).collect();
    let (received, bstats) = broadcast_items(g, tree, packed, &cfg)?;
    stats.absorb(&bstats);

    let mut vectors = Vec::with_capacity(n);
    for v in 0..n {
        let list: Vec<(usize, u64)> = received[v].iter().flat_map(|p| p.0.iter().copied()).collect();
        let mut by_value: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
        for (rep, &(id, value)) in list.iter().enumerate() {
            by_value.entry(value).or_default().push((rep, id));
        }
        let mut vec = vec![0i64; reps];
        if let Some(x) = vals.get(v) {
            for &(rep, id) in by_value.get(&x).into_iter().flatten() {
                vec[rep] = i64::from(setup.ids[v] >= id);
            }
        }
        vectors.push(vec);
    }
    let (r, astats) = aggregate_vector(g, tree, vectors, n as u128, &cfg)?;
    stats.absorb(&astats);

    let group_means: Vec<f64> = r
        .chunks(per_group)
        .map(|c| c.iter().map(|&ri| ams_value(f1, ri as u64, params.p)).sum::<f64>() / per_group as f64)
        .collect();
    let estimate = median(group_means.clone());
    let (_, fstats) = broadcast_words(g, tree, &[estimate_word(estimate)], cost.budget().min(64), &cfg)?;
    stats.absorb(&fstats);
    Ok(SketchOutcome { estimate, repetitions: group_means, stats })
}
