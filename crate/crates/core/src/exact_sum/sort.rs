use super::network::SortingNetwork;
use crate::engines::{bits_for, BitCost, CongestConfig, Payload, RoundStats};
use crate::error::Result;
use crate::graph::Graph;
use crate::primitives::{route, LeaderSetup, Routed, Router};
use serde::{Deserialize, Serialize};

/// Sort key of a node value: NULL sorts first, padding last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Key {
    NegInf,
    Val(u64),
    PosInf,
}

impl Payload for Key {
    fn bits(&self, c: &BitCost) -> u32 {
        2 + c.value()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Placed<K> {
    pub pos: usize,
    pub key: K,
    pub pos_bits: u32,
}

impl<K: Payload> Payload for Placed<K> {
    fn bits(&self, c: &BitCost) -> u32 {
        self.pos_bits + self.key.bits(c)
    }
}

/// Node hosting virtual position q: the node with identifier (q mod n) + 1.
pub(crate) fn host(setup: &LeaderSetup, q: usize) -> usize {
    setup.node_at[q % setup.node_at.len()]
}

/// Runs `net` over keys placed at positions 0..width, one routed exchange
/// batch per layer: both ends of a comparator send their key to the other
/// end's host, which keeps the min (low end) or max (high end).
pub(crate) fn sort_positions<K>(
    g: &Graph,
    setup: &LeaderSetup,
    router: &Router,
    net: &SortingNetwork,
    mut keys: Vec<K>,
    cfg: &CongestConfig,
) -> Result<(Vec<K>, RoundStats)>
where
    K: Ord + Clone + Payload,
{
    assert_eq!(keys.len(), net.width);
    let pos_bits = bits_for(net.width as u128);
    let mut partner = vec![usize::MAX; net.width];
    let mut stats = RoundStats::default();
    for layer in &net.layers {
        let mut batch = Vec::with_capacity(2 * layer.len());
        for &(a, b) in layer {
            partner[a] = b;
            partner[b] = a;
            for (from, to) in [(a, b), (b, a)] {
                batch.push(Routed {
                    src: host(setup, from),
                    dst: host(setup, to),
                    payload: Placed { pos: from, key: keys[from].clone(), pos_bits },
                });
            }
        }
        let (delivered, s) = route(g, setup, router, batch, cfg)?;
        stats.absorb(&s);
        for (_, msg) in delivered.into_iter().flatten() {
            let here = partner[msg.pos];
            let mine = &keys[here];
            let keep = if here < msg.pos { mine.min(&msg.key) } else { mine.max(&msg.key) }.clone();
            keys[here] = keep;
        }
        for &(a, b) in layer {
            debug_assert!(keys[a] <= keys[b]);
        }
    }
    Ok((keys, stats))
}

/// Sorts node values so the node with identifier i holds the i-th smallest,
/// NULLs first. Returns the key held by each identifier (index id − 1).
pub fn distributed_sort(
    g: &Graph,
    setup: &LeaderSetup,
    router: &Router,
    net: &SortingNetwork,
    vals: &[Option<u64>],
    cfg: &CongestConfig,
) -> Result<(Vec<Key>, RoundStats)> {
    let n = g.n();
    let keys: Vec<Key> = (0..net.width)
        .map(|q| if q < n { vals[setup.node_at[q]].map_or(Key::NegInf, Key::Val) } else { Key::PosInf })
        .collect();
    let (mut sorted, stats) = sort_positions(g, setup, router, net, keys, cfg)?;
    sorted.truncate(n);
    Ok((sorted, stats))
}
