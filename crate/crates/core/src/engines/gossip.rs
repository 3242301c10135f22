use super::{BitCost, Payload, RoundStats};
use crate::error::{Error, Result};
use crate::rng::{node_rng, tag, NodeRng};
use rand::Rng;

/// A node's communication choice for one round.
#[derive(Clone, Debug, PartialEq)]
pub enum GossipOp<M> {
    Idle,
    Push(M),
    Pull,
}

/// Result of one step: the operation, the payload served to anyone pulling
/// from this node (kept until replaced), and whether to sleep until mail arrives.
#[derive(Clone, Debug, PartialEq)]
pub struct GossipAction<M> {
    pub op: GossipOp<M>,
    pub pull_response: Option<M>,
    pub halt: bool,
}

impl<M> GossipAction<M> {
    pub fn idle() -> Self {
        Self { op: GossipOp::Idle, pull_response: None, halt: false }
    }

    pub fn push(msg: M) -> Self {
        Self { op: GossipOp::Push(msg), pull_response: None, halt: false }
    }

    pub fn pull() -> Self {
        Self { op: GossipOp::Pull, pull_response: None, halt: false }
    }

    pub fn halt() -> Self {
        Self { op: GossipOp::Idle, pull_response: None, halt: true }
    }

    pub fn responding(mut self, msg: Option<M>) -> Self {
        self.pull_response = msg;
        self
    }

    pub fn halting(mut self) -> Self {
        self.halt = true;
        self
    }
}

/// A message received at the start of a round.
#[derive(Clone, Debug, PartialEq)]
pub enum Delivery<M> {
    /// `from` pushed `msg` to this node.
    Pushed { from: usize, msg: M },
    /// This node pulled from `from` and got its declared response.
    Pulled { from: usize, msg: M },
}

pub struct GossipCtx<'a, M> {
    node: usize,
    round: u64,
    n: usize,
    seed: u64,
    inbox: &'a mut Vec<Delivery<M>>,
    rng: Option<NodeRng>,
}

impl<'a, M> GossipCtx<'a, M> {
    pub fn node(&self) -> usize {
        self.node
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn inbox(&self) -> &[Delivery<M>] {
        self.inbox
    }

    pub fn take_inbox(&mut self) -> std::vec::Drain<'_, Delivery<M>> {
        self.inbox.drain(..)
    }

    pub fn rng(&mut self) -> &mut NodeRng {
        let (seed, node, round) = (self.seed, self.node as u64, self.round);
        self.rng.get_or_insert_with(|| node_rng(seed, &[tag::NODE, node, round]))
    }
}

pub trait GossipProgram {
    type Msg: Payload + Clone;
    fn step(&mut self, ctx: &mut GossipCtx<'_, Self::Msg>) -> GossipAction<Self::Msg>;
}

/// Source of the per-round partner map t(u).
pub trait PartnerSampler {
    fn n(&self) -> usize;
    /// Fills `out[i]` with the partner of `requesters[i].0` for `round`;
    /// the flag marks a PULL, whose reply travels back.
    fn draw(&mut self, round: u64, requesters: &[(usize, bool)], out: &mut Vec<usize>) -> Result<()>;
    /// CONGEST rounds spent producing partners so far.
    fn charged_rounds(&self) -> u64 {
        0
    }
    /// Called when an engine run starts; later runs must not reuse partner draws.
    fn begin_run(&mut self) {}
}

/// Ideal GOSSIP(0): every partner uniform on all n nodes, self included.
#[derive(Clone, Debug)]
pub struct UniformPartners {
    n: usize,
    seed: u64,
    epoch: u64,
}

impl UniformPartners {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, epoch: 0 }
    }

}

impl PartnerSampler for UniformPartners {
    fn n(&self) -> usize {
        self.n
    }

    fn begin_run(&mut self) {
        self.epoch += 1;
    }

    fn draw(&mut self, round: u64, requesters: &[(usize, bool)], out: &mut Vec<usize>) -> Result<()> {
        let mut rng = node_rng(self.seed, &[tag::PARTNER, self.epoch, round]);
        out.clear();
        out.extend(requesters.iter().map(|_| rng.gen_range(0..self.n)));
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GossipConfig {
    pub seed: u64,
    pub round_cap: u64,
    pub cost: BitCost,
}

impl GossipConfig {
    pub fn new(seed: u64, cost: BitCost) -> Self {
        Self { seed, round_cap: 10_000_000, cost }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_round_cap(mut self, cap: u64) -> Self {
        self.round_cap = cap;
        self
    }
}

/// Runs one GOSSIP program until every node has halted with no mail in
/// flight, or the round cap is reached. Partners are drawn only for nodes
/// that PUSH or PULL; a PULL returns the target's latest declared response.
pub fn run_gossip<P, S>(partners: &mut S, nodes: &mut [P], cfg: &GossipConfig) -> Result<RoundStats>
where
    P: GossipProgram,
    S: PartnerSampler + ?Sized,
{
    let n = nodes.len();
    assert_eq!(partners.n(), n, "partner sampler sized for a different network");
    let budget = cfg.cost.budget();
    partners.begin_run();
    let charged_before = partners.charged_rounds();
    let mut inbox: Vec<Vec<Delivery<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
    let mut next_inbox: Vec<Vec<Delivery<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
    let mut mail: Vec<usize> = Vec::new();
    let mut next_mail: Vec<usize> = Vec::new();
    let mut running: Vec<usize> = (0..n).collect();
    let mut responses: Vec<Option<P::Msg>> = vec![None; n];
    let mut stamp = vec![0u64; n];
    let mut invoke: Vec<usize> = Vec::with_capacity(n);
    let mut requesters: Vec<(usize, bool)> = Vec::new();
    let mut ops: Vec<GossipOp<P::Msg>> = Vec::new();
    let mut targets: Vec<usize> = Vec::new();
    let mut stats = RoundStats::default();
    let mut round = 1u64;

    loop {
        invoke.clear();
        for &u in running.iter().chain(mail.iter()) {
            if stamp[u] != round {
                stamp[u] = round;
                invoke.push(u);
            }
        }
        if invoke.is_empty() {
            break;
        }
        if round > cfg.round_cap {
            stats.hit_round_cap = true;
            break;
        }
        if !mail.is_empty() {
            invoke.sort_unstable();
        }
        running.clear();
        requesters.clear();
        ops.clear();
        for &u in &invoke {
            let action = {
                let mut ctx = GossipCtx { node: u, round, n, seed: cfg.seed, inbox: &mut inbox[u], rng: None };
                nodes[u].step(&mut ctx)
            };
            inbox[u].clear();
            if let Some(resp) = &action.pull_response {
                check_bits(resp, &cfg.cost, budget, u, round)?;
            }
            responses[u] = action.pull_response;
            if !action.halt {
                running.push(u);
            }
            match action.op {
                GossipOp::Idle => {}
                op => {
                    if let GossipOp::Push(m) = &op {
                        check_bits(m, &cfg.cost, budget, u, round)?;
                    }
                    requesters.push((u, matches!(op, GossipOp::Pull)));
                    ops.push(op);
                }
            }
        }
        let mut sent = 0u64;
        if !requesters.is_empty() {
            partners.draw(round, &requesters, &mut targets)?;
            for ((&(u, _), op), &t) in requesters.iter().zip(ops.drain(..)).zip(targets.iter()) {
                let (dest, delivery) = match op {
                    GossipOp::Push(msg) => (t, Delivery::Pushed { from: u, msg }),
                    GossipOp::Pull => match &responses[t] {
                        Some(msg) => (u, Delivery::Pulled { from: t, msg: msg.clone() }),
                        None => continue,
                    },
                    GossipOp::Idle => unreachable!(),
                };
                if next_inbox[dest].is_empty() {
                    next_mail.push(dest);
                }
                next_inbox[dest].push(delivery);
                sent += 1;
            }
            stats.rounds = round;
        }
        stats.executed_rounds += 1;
        if sent > 0 {
            stats.per_round_message_counts.resize(round as usize - 1, 0);
            stats.per_round_message_counts.push(sent);
            stats.messages_sent += sent;
            stats.max_edge_congestion = 1;
        }
        std::mem::swap(&mut inbox, &mut next_inbox);
        std::mem::swap(&mut mail, &mut next_mail);
        next_mail.clear();
        round += 1;
    }
    stats.per_round_message_counts.resize(stats.rounds as usize, 0);
    stats.charged_rounds = partners.charged_rounds() - charged_before;
    Ok(stats)
}

fn check_bits<M: Payload>(msg: &M, cost: &BitCost, budget: u32, node: usize, round: u64) -> Result<()> {
    let bits = msg.bits(cost);
    if bits > budget {
        return Err(Error::ProtocolViolation {
            node: node + 1,
            round,
            reason: format!("{bits}-bit payload exceeds budget of {budget} bits"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct Id(usize);
    impl Payload for Id {
        fn bits(&self, c: &BitCost) -> u32 {
            c.node_id()
        }
    }

    fn cfg(n: usize, seed: u64) -> GossipConfig {
        GossipConfig::new(seed, BitCost::new(n, 16, 8))
    }

    struct PushId {
        rounds: u64,
        heard: Vec<usize>,
    }
    impl GossipProgram for PushId {
        type Msg = Id;
        fn step(&mut self, ctx: &mut GossipCtx<'_, Id>) -> GossipAction<Id> {
            for d in ctx.inbox() {
                if let Delivery::Pushed { msg, .. } = d {
                    self.heard.push(msg.0);
                }
            }
            if ctx.round() > self.rounds {
                GossipAction::halt()
            } else {
                GossipAction::push(Id(ctx.node()))
            }
        }
    }

    #[test]
    fn two_nodes_hear_each_other_half_the_time() {
        let rounds = 20_000;
        let mut nodes = vec![PushId { rounds, heard: vec![] }, PushId { rounds, heard: vec![] }];
        let mut partners = UniformPartners::new(2, 3);
        run_gossip(&mut partners, &mut nodes, &cfg(2, 3)).unwrap();
        let from_other = nodes[0].heard.iter().filter(|&&x| x == 1).count() as f64 / rounds as f64;
        assert!((from_other - 0.5).abs() < 0.015, "{from_other}");
    }

    struct Puller {
        got: Vec<usize>,
    }
    impl GossipProgram for Puller {
        type Msg = Id;
        fn step(&mut self, ctx: &mut GossipCtx<'_, Id>) -> GossipAction<Id> {
            for d in ctx.inbox() {
                if let Delivery::Pulled { from, msg } = d {
                    assert_eq!(*from, msg.0);
                    self.got.push(msg.0);
                }
            }
            if ctx.round() > 5 {
                return GossipAction::halt();
            }
            let me = ctx.node();
            if me == 0 {
                GossipAction::pull()
            } else {
                GossipAction::idle().responding(Some(Id(me))).halting()
            }
        }
    }

    #[test]
    fn pull_serves_sticky_responses() {
        let mut nodes: Vec<Puller> = (0..4).map(|_| Puller { got: vec![] }).collect();
        let mut partners = UniformPartners::new(4, 9);
        let stats = run_gossip(&mut partners, &mut nodes, &cfg(4, 9)).unwrap();
        assert_eq!(stats.rounds, 5);
        assert!(nodes[0].got.iter().all(|&x| x != 0));
        assert_eq!(nodes[0].got.len() as u64, stats.messages_sent);
    }

    #[test]
    fn uniform_partner_frequencies() {
        let n = 64usize;
        let rounds = 100_000u64;
        let mut partners = UniformPartners::new(n, 11);
        let requesters: Vec<(usize, bool)> = (0..n).map(|u| (u, false)).collect();
        let mut counts = vec![0u32; n * n];
        let mut out = Vec::new();
        for r in 1..=rounds {
            partners.draw(r, &requesters, &mut out).unwrap();
            for (u, &v) in out.iter().enumerate() {
                counts[u * n + v] += 1;
            }
        }
        let p = 1.0 / n as f64;
        let tol = 5.0 * (p * (1.0 - p) / rounds as f64).sqrt();
        for &c in &counts {
            let f = c as f64 / rounds as f64;
            assert!((f - p).abs() <= tol, "{f}");
        }
        // Chi-square per source; 63 degrees of freedom, 1e-4 critical value ≈ 117.
        for u in 0..n {
            let e = rounds as f64 * p;
            let chi: f64 = (0..n).map(|v| (counts[u * n + v] as f64 - e).powi(2) / e).sum();
            assert!(chi < 117.0, "source {u}: chi-square {chi}");
        }
    }

    #[test]
    fn oversized_push_is_rejected() {
        struct Big;
        #[derive(Clone)]
        struct Fat;
        impl Payload for Fat {
            fn bits(&self, c: &BitCost) -> u32 {
                c.budget() + 1
            }
        }
        impl GossipProgram for Big {
            type Msg = Fat;
            fn step(&mut self, _: &mut GossipCtx<'_, Fat>) -> GossipAction<Fat> {
                GossipAction::push(Fat)
            }
        }
        let err = run_gossip(&mut UniformPartners::new(3, 0), &mut [Big, Big, Big], &cfg(3, 0)).unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation { node: 1, round: 1, .. }));
    }

    #[test]
    fn same_seed_same_stats() {
        let run = || {
            let mut nodes: Vec<PushId> = (0..16).map(|_| PushId { rounds: 30, heard: vec![] }).collect();
            let s = run_gossip(&mut UniformPartners::new(16, 5), &mut nodes, &cfg(16, 5)).unwrap();
            (s, nodes.into_iter().map(|p| p.heard).collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }
}
