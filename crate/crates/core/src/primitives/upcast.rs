use crate::engines::{bits_for, run_congest, BitCost, CongestConfig, CongestProgram, Control, Ctx, Payload, RoundStats};
use crate::error::{invalid, Result};
use crate::graph::{Graph, Tree};
use std::collections::BTreeSet;

#[derive(Clone, Copy)]
struct Item {
    group: u32,
    value: u64,
    down: bool,
    group_bits: u8,
    value_bits: u8,
}

impl Payload for Item {
    fn bits(&self, _: &BitCost) -> u32 {
        self.group_bits as u32 + self.value_bits as u32
    }
}

struct UpNode {
    parent: Option<usize>,
    children: Vec<usize>,
    /// Upcast level: depth − bfs level + 1.
    start: u64,
    k: usize,
    t: usize,
    broadcast: bool,
    held: Vec<BTreeSet<u64>>,
    sent: Vec<usize>,
    last_sent: Vec<Option<u64>>,
    result: Vec<Vec<u64>>,
    forward: Vec<Item>,
    group_bits: u8,
    value_bits: u8,
}

impl UpNode {
    /// The (group, rank) slot scheduled at `round`, 0-based.
    fn slot(&self, round: u64) -> Option<(usize, usize)> {
        let off = round.checked_sub(self.start)? as usize;
        let j = off / self.t;
        (j < self.k).then_some((j, off % self.t))
    }

    /// The next round at which a held value is scheduled to leave.
    fn next_wake(&self, round: u64) -> Option<u64> {
        (0..self.k)
            .filter(|&g| self.sent[g] < self.t && !self.held[g].is_empty())
            .map(|g| self.start + (g * self.t + self.sent[g]) as u64)
            .filter(|&r| r > round)
            .min()
    }
}

impl CongestProgram for UpNode {
    type Msg = Item;
    fn step(&mut self, ctx: &mut Ctx<'_, Item>) -> Control {
        let round = ctx.round();
        for &(_, it) in ctx.inbox() {
            let g = it.group as usize;
            if it.down {
                self.result[g].push(it.value);
                self.forward.push(it);
            } else if self.last_sent[g].map_or(true, |s| it.value > s) {
                self.held[g].insert(it.value);
            }
        }
        for it in self.forward.drain(..) {
            for &c in &self.children {
                ctx.send(c, it);
            }
        }
        if let Some((j, i)) = self.slot(round) {
            if self.sent[j] == i {
                if let Some(value) = self.held[j].pop_first() {
                    self.sent[j] += 1;
                    self.last_sent[j] = Some(value);
                    let item = Item {
                        group: j as u32,
                        value,
                        down: self.parent.is_none(),
                        group_bits: self.group_bits,
                        value_bits: self.value_bits,
                    };
                    match self.parent {
                        Some(p) => ctx.send(p, item),
                        None => {
                            self.result[j].push(value);
                            if self.broadcast {
                                for &c in &self.children {
                                    ctx.send(c, item);
                                }
                            }
                        }
                    }
                }
            }
        }
        match self.next_wake(round) {
            Some(r) => Control::WakeAt(r),
            None => Control::Idle,
        }
    }
}

/// Result of a grouped upcast.
#[derive(Clone, Debug)]
pub struct GroupedUpcast {
    /// Up to `t` smallest distinct values of each group, ascending.
    pub groups: Vec<Vec<u64>>,
    /// Whether every node ended with the same lists (only meaningful with broadcast).
    pub consistent: bool,
    pub stats: RoundStats,
}

/// Delivers the `t` smallest distinct values of each of `k` groups to the
/// root (and, with `broadcast`, to every node). A node at upcast level L
/// sends the i-th smallest value of group j at round L + j·t + i (0-based
/// j, i), so every value it needs has arrived by then; the root relays its
/// own scheduled picks downward. Finishes within 2·depth + k·t rounds.
pub fn upcast_k_smallest_grouped(
    g: &Graph,
    tree: &Tree,
    k: usize,
    t: usize,
    items: &[Vec<(usize, u64)>],
    value_range: u64,
    broadcast: bool,
    cfg: &CongestConfig,
) -> Result<GroupedUpcast> {
    if k == 0 || t == 0 {
        return Err(invalid("grouped upcast needs k >= 1 and t >= 1"));
    }
    let group_bits = bits_for(k as u128) as u8;
    let value_bits = bits_for(value_range as u128) as u8;
    let depth = tree.depth() as u64;
    let mut nodes: Vec<UpNode> = (0..g.n())
        .map(|v| {
            let mut held = vec![BTreeSet::new(); k];
            for &(grp, val) in &items[v] {
                assert!(grp < k, "group {grp} out of range");
                held[grp].insert(val);
            }
            UpNode {
                parent: tree.parent(v),
                children: tree.children(v).to_vec(),
                start: depth - tree.level(v) as u64 + 1,
                k,
                t,
                broadcast,
                held,
                sent: vec![0; k],
                last_sent: vec![None; k],
                result: vec![Vec::new(); k],
                forward: Vec::new(),
                group_bits,
                value_bits,
            }
        })
        .collect();
    let stats = run_congest(g, &mut nodes, cfg)?;
    let root = tree.root();
    let groups = nodes[root].result.clone();
    let consistent = !broadcast || nodes.iter().all(|nd| nd.result == groups);
    Ok(GroupedUpcast { groups, consistent, stats })
}
