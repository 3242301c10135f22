use super::LeaderSetup;
use crate::constants::log2n;
use crate::engines::{run_congest, BitCost, CongestConfig, CongestProgram, Control, Ctx, Payload, RoundStats};
use crate::error::{invalid, Result};
use crate::graph::Graph;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// How a batch of point-to-point messages is delivered.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Router {
    /// Store-and-forward along the BFS tree with FIFO queues per edge direction.
    Tree,
    /// Instant delivery charged ⌈τ · 2^(c·⌈√log₂ n⌉)⌉ rounds per batch.
    CostModel { tau: u64, c: f64 },
}

impl Router {
    pub fn cost_model_charge(tau: u64, c: f64, n: usize) -> u64 {
        let exponent = c * (log2n(n) as f64).sqrt().ceil();
        (tau as f64 * exponent.exp2()).ceil() as u64
    }
}

/// One message of a routing batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Routed<P> {
    pub src: usize,
    pub dst: usize,
    pub payload: P,
}

#[derive(Clone)]
struct Envelope<P> {
    src: usize,
    dst: usize,
    payload: P,
}

impl<P: Payload> Payload for Envelope<P> {
    fn bits(&self, c: &BitCost) -> u32 {
        2 * c.node_id() + self.payload.bits(c)
    }
}

struct RouterNode<'s, P> {
    me: usize,
    setup: &'s LeaderSetup,
    /// Slot 0 leads to the parent, slot i ≥ 1 to the i-th child.
    queues: Vec<VecDeque<Envelope<P>>>,
    delivered: Vec<(usize, P)>,
}

impl<P> RouterNode<'_, P> {
    fn slot_towards(&self, dst: usize) -> usize {
        let id = self.setup.ids[dst];
        let (lo, hi) = self.setup.id_range(self.me);
        if id > lo && id <= hi {
            let children = self.setup.tree.children(self.me);
            children.partition_point(|&c| self.setup.ids[c] <= id)
        } else {
            0
        }
    }

    fn accept(&mut self, env: Envelope<P>) {
        if env.dst == self.me {
            self.delivered.push((env.src, env.payload));
        } else {
            let slot = self.slot_towards(env.dst);
            self.queues[slot].push_back(env);
        }
    }
}

impl<P: Payload> CongestProgram for RouterNode<'_, P> {
    type Msg = Envelope<P>;
    fn step(&mut self, ctx: &mut Ctx<'_, Envelope<P>>) -> Control {
        let arrivals: Vec<Envelope<P>> = ctx.take_inbox().map(|(_, e)| e).collect();
        for env in arrivals {
            self.accept(env);
        }
        let mut busy = false;
        for slot in 0..self.queues.len() {
            let len = self.queues[slot].len();
            if len == 0 {
                continue;
            }
            ctx.note_queue(len);
            let env = self.queues[slot].pop_front().unwrap();
            let to = if slot == 0 {
                self.setup.tree.parent(self.me).expect("root never routes upward")
            } else {
                self.setup.tree.children(self.me)[slot - 1]
            };
            ctx.send(to, env);
            busy |= len > 1;
        }
        if busy {
            Control::Continue
        } else {
            Control::Idle
        }
    }
}

/// Delivers every message of `batch`; returns, per node, the (source,
/// payload) pairs it received, in arrival order.
pub fn route<P: Payload + Clone>(
    g: &Graph,
    setup: &LeaderSetup,
    router: &Router,
    batch: Vec<Routed<P>>,
    cfg: &CongestConfig,
) -> Result<(Vec<Vec<(usize, P)>>, RoundStats)> {
    let n = g.n();
    let mut load = vec![0usize; n];
    for m in &batch {
        if m.src >= n || m.dst >= n {
            return Err(invalid(format!("message {} -> {} outside 1..={n}", m.src + 1, m.dst + 1)));
        }
        load[m.src] += 1;
        load[m.dst] += 1;
    }
    let polylog = (log2n(n) * log2n(n)) as usize;
    if let Some(v) = (0..n).find(|&v| load[v] > 2 * polylog * g.degree(v)) {
        log::warn!("node {} handles {} messages in one routing batch", v + 1, load[v]);
    }
    match *router {
        Router::CostModel { tau, c } => {
            let mut out = vec![Vec::new(); n];
            let mut moved = false;
            for m in batch {
                moved |= m.src != m.dst;
                out[m.dst].push((m.src, m.payload));
            }
            let mut stats = RoundStats::default();
            if moved {
                stats.charge(Router::cost_model_charge(tau, c, n));
            }
            Ok((out, stats))
        }
        Router::Tree => {
            let mut nodes: Vec<RouterNode<'_, P>> = (0..n)
                .map(|v| RouterNode {
                    me: v,
                    setup,
                    queues: (0..=setup.tree.children(v).len()).map(|_| VecDeque::new()).collect(),
                    delivered: Vec::new(),
                })
                .collect();
            for m in batch {
                let src = m.src;
                nodes[src].accept(Envelope { src: m.src, dst: m.dst, payload: m.payload });
            }
            let stats = run_congest(g, &mut nodes, cfg)?;
            Ok((nodes.into_iter().map(|nd| nd.delivered).collect(), stats))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;
    use crate::primitives::{elect_leader_and_ids, Word};
    use crate::rng::run_rng;
    use rand::seq::SliceRandom;

    fn setup(spec: &str) -> (Graph, LeaderSetup, CongestConfig) {
        let g = generate(&spec.parse().unwrap()).unwrap();
        let cfg = CongestConfig::new(0, BitCost::new(g.n(), 1 << 10, 8));
        let s = elect_leader_and_ids(&g, &cfg).unwrap();
        (g, s, cfg)
    }

    fn word(v: usize) -> Word {
        Word { value: v as u64, width: 10 }
    }

    #[test]
    fn adjacent_message_within_two_depths() {
        let (g, s, cfg) = setup("random-regular:32:3:1");
        let (u, v) = g.edges().nth(7).unwrap();
        let (out, stats) = route(&g, &s, &Router::Tree, vec![Routed { src: u, dst: v, payload: word(5) }], &cfg).unwrap();
        assert_eq!(out[v], vec![(u, word(5))]);
        assert!(stats.rounds <= 2 * s.tree.depth() as u64);
    }

    #[test]
    fn identity_permutation_is_free() {
        let (g, s, cfg) = setup("clique:8");
        let batch: Vec<_> = (0..8).map(|v| Routed { src: v, dst: v, payload: word(v) }).collect();
        for router in [Router::Tree, Router::CostModel { tau: 5, c: 1.0 }] {
            let (out, stats) = route(&g, &s, &router, batch.clone(), &cfg).unwrap();
            assert_eq!(stats.total_rounds(), 0);
            assert!((0..8).all(|v| out[v] == vec![(v, word(v))]));
        }
    }

    #[test]
    fn random_permutation_on_clique() {
        let (g, s, cfg) = setup("clique:64");
        let mut perm: Vec<usize> = (0..64).collect();
        perm.shuffle(&mut run_rng(3, &[]));
        let batch: Vec<_> = (0..64).map(|v| Routed { src: v, dst: perm[v], payload: word(v) }).collect();
        let (out, stats) = route(&g, &s, &Router::Tree, batch, &cfg).unwrap();
        for v in 0..64 {
            assert_eq!(out[perm[v]], vec![(v, word(v))]);
        }
        // The BFS tree of a clique is a star: one hop up, one hop down, no queueing.
        assert_eq!(stats.rounds, 2);
        assert_eq!(stats.max_edge_congestion, 1);
    }

    #[test]
    fn cost_model_charges_formula() {
        assert_eq!(Router::cost_model_charge(3, 1.0, 64), 3 * 8);
        assert_eq!(Router::cost_model_charge(4, 1.0, 1024), 4 * 16);
        let (g, s, cfg) = setup("clique:4");
        let err = route(&g, &s, &Router::Tree, vec![Routed { src: 0, dst: 9, payload: word(1) }], &cfg);
        assert!(err.is_err());
    }
}
