use crate::engines::{bits_for, run_congest, BitCost, CongestConfig, CongestProgram, Control, Ctx, Payload, RoundStats};
use crate::error::{Error, Result};
use crate::graph::{Graph, Tree};

#[derive(Clone, Copy)]
enum SumMsg {
    Up(i128),
    Down(i128),
}

struct Ranged {
    msg: SumMsg,
    width: u32,
}

impl Payload for Ranged {
    fn bits(&self, _: &BitCost) -> u32 {
        self.width
    }
}

struct SumNode {
    parent: Option<usize>,
    children: Vec<usize>,
    waiting: usize,
    acc: i128,
    bound: u128,
    width: u32,
    broadcast: bool,
    child_sums: Vec<(usize, i128)>,
    known: Option<i128>,
    overflow: Option<i128>,
    reported: bool,
}

impl CongestProgram for SumNode {
    type Msg = Ranged;
    fn step(&mut self, ctx: &mut Ctx<'_, Ranged>) -> Control {
        for &(from, Ranged { msg, .. }) in ctx.inbox() {
            match msg {
                SumMsg::Up(x) => {
                    self.child_sums.push((from, x));
                    self.acc += x;
                    self.waiting -= 1;
                }
                SumMsg::Down(x) => self.known = Some(x),
            }
        }
        if self.acc.unsigned_abs() > self.bound {
            self.overflow.get_or_insert(self.acc);
        }
        if self.waiting == 0 && !self.reported {
            self.reported = true;
            match self.parent {
                Some(p) => ctx.send(p, Ranged { msg: SumMsg::Up(self.acc), width: self.width }),
                None => self.known = Some(self.acc),
            }
            if self.parent.is_none() && self.broadcast {
                self.forward(ctx);
            }
            return Control::Idle;
        }
        if self.parent.is_some() && self.known.is_some() && self.broadcast {
            self.forward(ctx);
        }
        Control::Idle
    }
}

impl SumNode {
    fn forward(&mut self, ctx: &mut Ctx<'_, Ranged>) {
        let total = self.known.expect("forwarding a known total");
        for &c in &self.children {
            ctx.send(c, Ranged { msg: SumMsg::Down(total), width: self.width });
        }
    }
}

/// Outcome of a tree convergecast.
#[derive(Clone, Debug)]
pub struct Convergecast {
    pub total: i128,
    /// Sums reported by each node's children, as (child, subtree sum).
    pub child_sums: Vec<Vec<(usize, i128)>>,
    /// Total as known at each node (`None` without broadcast, except at the root).
    pub known: Vec<Option<i128>>,
    pub stats: RoundStats,
}

/// Sums `values` up `tree`, then (if `broadcast`) sends the total back down.
/// Every partial sum must lie in [−bound, bound]; messages cost ⌈log₂(2·bound+1)⌉ bits.
pub fn convergecast(
    g: &Graph,
    tree: &Tree,
    values: &[i128],
    bound: u128,
    broadcast: bool,
    cfg: &CongestConfig,
) -> Result<Convergecast> {
    let width = bits_for(2 * bound + 1);
    let mut nodes: Vec<SumNode> = (0..g.n())
        .map(|v| SumNode {
            parent: tree.parent(v),
            children: tree.children(v).to_vec(),
            waiting: tree.children(v).len(),
            acc: values[v],
            bound,
            width,
            broadcast,
            child_sums: Vec::new(),
            known: None,
            overflow: None,
            reported: false,
        })
        .collect();
    let stats = run_congest(g, &mut nodes, cfg)?;
    if let Some(value) = nodes.iter().find_map(|s| s.overflow) {
        return Err(Error::RangeOverflow { value, bound });
    }
    Ok(Convergecast {
        total: nodes[tree.root()].acc,
        child_sums: nodes.iter_mut().map(|s| std::mem::take(&mut s.child_sums)).collect(),
        known: nodes.iter().map(|s| s.known).collect(),
        stats,
    })
}

/// Exact sum known at every node after an upward and a downward sweep.
pub fn aggregate_sum(g: &Graph, tree: &Tree, values: &[i128], bound: u128, cfg: &CongestConfig) -> Result<(i128, RoundStats)> {
    let c = convergecast(g, tree, values, bound, true, cfg)?;
    debug_assert!(c.known.iter().all(|&k| k == Some(c.total)));
    Ok((c.total, c.stats))
}

const MAX_PACK: usize = 16;

/// A run of consecutive counters.
#[derive(Clone, Copy)]
struct Chunk {
    index: u32,
    len: u8,
    width: u8,
    index_bits: u8,
    vals: [i64; MAX_PACK],
}

impl Payload for Chunk {
    fn bits(&self, _: &BitCost) -> u32 {
        self.index_bits as u32 + self.len as u32 * self.width as u32
    }
}

struct VecNode {
    parent: Option<usize>,
    children: usize,
    acc: Vec<i64>,
    got: Vec<u32>,
    next: usize,
    chunks: usize,
    per_msg: usize,
    width: u8,
    index_bits: u8,
}

impl CongestProgram for VecNode {
    type Msg = Chunk;
    fn step(&mut self, ctx: &mut Ctx<'_, Chunk>) -> Control {
        for (_, c) in ctx.take_inbox() {
            let base = c.index as usize * self.per_msg;
            for (slot, &x) in self.acc[base..base + c.len as usize].iter_mut().zip(&c.vals) {
                *slot += x;
            }
            self.got[c.index as usize] += 1;
        }
        let Some(p) = self.parent else { return Control::Idle };
        let ready = |s: &Self, i: usize| i < s.chunks && s.got[i] as usize == s.children;
        if ready(self, self.next) {
            let base = self.next * self.per_msg;
            let len = self.per_msg.min(self.acc.len() - base);
            let mut vals = [0i64; MAX_PACK];
            vals[..len].copy_from_slice(&self.acc[base..base + len]);
            ctx.send(
                p,
                Chunk { index: self.next as u32, len: len as u8, width: self.width, index_bits: self.index_bits, vals },
            );
            self.next += 1;
        }
        if ready(self, self.next) {
            Control::Continue
        } else {
            Control::Idle
        }
    }
}

/// Coordinate-wise sum of equal-length vectors, delivered to the root only.
/// Counters are packed as many per message as the budget allows and
/// pipelined, so the run takes about depth + width/pack rounds.
pub fn aggregate_vector(
    g: &Graph,
    tree: &Tree,
    vectors: Vec<Vec<i64>>,
    bound: u128,
    cfg: &CongestConfig,
) -> Result<(Vec<i64>, RoundStats)> {
    let w = vectors.first().map_or(0, Vec::len);
    assert!(vectors.iter().all(|v| v.len() == w), "vectors must share a length");
    if w == 0 {
        return Ok((Vec::new(), RoundStats::default()));
    }
    let width = bits_for(2 * bound + 1);
    let budget = cfg.cost.budget();
    let rough_chunks = w.div_ceil(((budget / width) as usize).clamp(1, MAX_PACK));
    let index_bits = bits_for(rough_chunks as u128);
    if width + index_bits > budget {
        return Err(crate::error::invalid(format!("a {width}-bit counter does not fit the {budget}-bit budget")));
    }
    let per_msg = (((budget - index_bits) / width) as usize).clamp(1, MAX_PACK);
    let chunks = w.div_ceil(per_msg);
    let mut nodes: Vec<VecNode> = vectors
        .into_iter()
        .enumerate()
        .map(|(v, acc)| VecNode {
            parent: tree.parent(v),
            children: tree.children(v).len(),
            acc,
            got: vec![0; chunks],
            next: 0,
            chunks,
            per_msg,
            width: width as u8,
            index_bits: index_bits as u8,
        })
        .collect();
    let stats = run_congest(g, &mut nodes, cfg)?;
    let root = &nodes[tree.root()];
    if let Some(&x) = root.acc.iter().find(|x| x.unsigned_abs() as u128 > bound) {
        return Err(Error::RangeOverflow { value: x as i128, bound });
    }
    Ok((nodes.swap_remove(tree.root()).acc, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bfs_tree, generate};
    use crate::rng::run_rng;
    use rand::Rng;

    fn net(spec: &str) -> (Graph, Tree, CongestConfig) {
        let g = generate(&spec.parse().unwrap()).unwrap();
        let t = bfs_tree(&g, 0);
        let cfg = CongestConfig::new(2, BitCost::new(g.n(), 1 << 10, 8));
        (g, t, cfg)
    }

    #[test]
    fn sums_ones_and_zeros() {
        let (g, t, cfg) = net("path:10");
        let (total, stats) = aggregate_sum(&g, &t, &[1; 10], 10, &cfg).unwrap();
        assert_eq!(total, 10);
        assert!(stats.rounds <= 2 * t.depth() as u64 + 2);
        assert_eq!(aggregate_sum(&g, &t, &[0; 10], 10, &cfg).unwrap().0, 0);
    }

    #[test]
    fn random_integers_match_direct_sum() {
        let (g, t, cfg) = net("random-regular:60:3:4");
        let mut rng = run_rng(1, &[]);
        for _ in 0..20 {
            let vals: Vec<i128> = (0..60).map(|_| rng.gen_range(-1000..=1000)).collect();
            let c = convergecast(&g, &t, &vals, 60_000, true, &cfg).unwrap();
            assert_eq!(c.total, vals.iter().sum::<i128>());
            assert!(c.known.iter().all(|&k| k == Some(c.total)));
            assert!(c.stats.rounds <= 2 * t.depth() as u64 + 2);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let (g, t, cfg) = net("path:4");
        assert!(matches!(aggregate_sum(&g, &t, &[3, 3, 3, 3], 10, &cfg), Err(Error::RangeOverflow { .. })));
    }

    #[test]
    fn child_sums_are_subtree_sums() {
        let (g, t, cfg) = net("random-regular:30:3:8");
        let c = convergecast(&g, &t, &[1; 30], 30, false, &cfg).unwrap();
        for v in 0..30 {
            for &(child, s) in &c.child_sums[v] {
                assert_eq!(s as usize, t.subtree_size(child));
            }
        }
    }

    #[test]
    fn vector_aggregation_is_pipelined() {
        let (g, t, cfg) = net("random-regular:50:4:5");
        let mut rng = run_rng(2, &[]);
        let w = 300;
        let vecs: Vec<Vec<i64>> = (0..50).map(|_| (0..w).map(|_| rng.gen_range(-1..=1)).collect()).collect();
        let expected: Vec<i64> = (0..w).map(|i| vecs.iter().map(|v| v[i]).sum()).collect();
        let (got, stats) = aggregate_vector(&g, &t, vecs, 50, &cfg).unwrap();
        assert_eq!(got, expected);
        let per_msg = ((cfg.cost.budget() - 6) / 7) as u64;
        assert!(stats.rounds <= t.depth() as u64 + (w as u64).div_ceil(per_msg) + 1, "{}", stats.rounds);
    }
}
