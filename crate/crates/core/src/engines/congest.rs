use super::{BitCost, Payload, RoundStats};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{node_rng, tag, NodeRng};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// What a node wants after its step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    /// Invoke again next round.
    Continue,
    /// Sleep until the given round (or an earlier message).
    WakeAt(u64),
    /// Sleep until a message arrives.
    Idle,
}

#[derive(Clone, Copy, Debug)]
pub struct CongestConfig {
    pub seed: u64,
    pub round_cap: u64,
    pub cost: BitCost,
}

impl CongestConfig {
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

/// A node's view of the current round.
pub struct Ctx<'a, M> {
    node: usize,
    round: u64,
    seed: u64,
    neighbors: &'a [usize],
    inbox: &'a mut Vec<(usize, M)>,
    outbox: &'a mut Vec<(usize, M)>,
    queue_peak: &'a mut u64,
    rng: Option<NodeRng>,
}

impl<'a, M> Ctx<'a, M> {
    pub fn node(&self) -> usize {
        self.node
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn neighbors(&self) -> &'a [usize] {
        self.neighbors
    }

    /// Messages sent to this node last round, as (sender, message).
    pub fn inbox(&self) -> &[(usize, M)] {
        self.inbox
    }

    pub fn take_inbox(&mut self) -> std::vec::Drain<'_, (usize, M)> {
        self.inbox.drain(..)
    }

    pub fn send(&mut self, to: usize, msg: M) {
        self.outbox.push((to, msg));
    }

    /// Records a local queue length for congestion accounting.
    pub fn note_queue(&mut self, len: usize) {
        *self.queue_peak = (*self.queue_peak).max(len as u64);
    }

    /// This node's private stream for this round.
    pub fn rng(&mut self) -> &mut NodeRng {
        let (seed, node, round) = (self.seed, self.node as u64, self.round);
        self.rng.get_or_insert_with(|| node_rng(seed, &[tag::NODE, node, round]))
    }
}

pub trait CongestProgram {
    type Msg: Payload;
    fn step(&mut self, ctx: &mut Ctx<'_, Self::Msg>) -> Control;
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sched {
    Active,
    Wake(u64),
    Idle,
}

/// Runs `nodes[v]` at node `v` in lock step until every node sleeps with no
/// mail in flight and no pending wake-up, or the round cap is reached.
pub fn run_congest<P: CongestProgram>(g: &Graph, nodes: &mut [P], cfg: &CongestConfig) -> Result<RoundStats> {
    let n = g.n();
    assert_eq!(nodes.len(), n, "one program per node");
    let budget = cfg.cost.budget();
    let mut inbox: Vec<Vec<(usize, P::Msg)>> = (0..n).map(|_| Vec::new()).collect();
    let mut next_inbox: Vec<Vec<(usize, P::Msg)>> = (0..n).map(|_| Vec::new()).collect();
    let mut mail: Vec<usize> = Vec::new();
    let mut next_mail: Vec<usize> = Vec::new();
    let mut sched = vec![Sched::Active; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut wakes: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut stamp = vec![0u64; n];
    let mut invoke: Vec<usize> = Vec::with_capacity(n);
    let mut outbox: Vec<(usize, P::Msg)> = Vec::new();
    let mut stats = RoundStats::default();
    let mut queue_peak = 0u64;
    let mut round = 1u64;

    loop {
        invoke.clear();
        for &u in active.iter().chain(mail.iter()) {
            if stamp[u] != round {
                stamp[u] = round;
                invoke.push(u);
            }
        }
        while let Some(&Reverse((r, u))) = wakes.peek() {
            if r > round {
                break;
            }
            wakes.pop();
            if sched[u] == Sched::Wake(r) && stamp[u] != round {
                stamp[u] = round;
                invoke.push(u);
            }
        }
        if invoke.is_empty() {
            match wakes.peek() {
                Some(&Reverse((r, _))) => {
                    round = r;
                    continue;
                }
                None => break,
            }
        }
        if round > cfg.round_cap {
            stats.hit_round_cap = true;
            break;
        }
        invoke.sort_unstable();
        active.clear();
        let mut sent = 0u64;
        for &u in &invoke {
            outbox.clear();
            let control = {
                let mut ctx = Ctx {
                    node: u,
                    round,
                    seed: cfg.seed,
                    neighbors: g.neighbors(u),
                    inbox: &mut inbox[u],
                    outbox: &mut outbox,
                    queue_peak: &mut queue_peak,
                    rng: None,
                };
                nodes[u].step(&mut ctx)
            };
            inbox[u].clear();
            if outbox.len() > 1 {
                outbox.sort_by_key(|&(to, _)| to);
            }
            let mut last = usize::MAX;
            for (to, msg) in outbox.drain(..) {
                let violation = |reason: String| Error::ProtocolViolation { node: u + 1, round, reason };
                if !g.has_edge(u, to) {
                    return Err(violation(format!("sent to non-neighbor {}", to + 1)));
                }
                if to == last {
                    return Err(violation(format!("two messages to {} in one round", to + 1)));
                }
                let bits = msg.bits(&cfg.cost);
                if bits > budget {
                    return Err(violation(format!("{bits}-bit payload exceeds budget of {budget} bits")));
                }
                last = to;
                if next_inbox[to].is_empty() {
                    next_mail.push(to);
                }
                next_inbox[to].push((u, msg));
                sent += 1;
            }
            match control {
                Control::Continue => {
                    sched[u] = Sched::Active;
                    active.push(u);
                }
                Control::WakeAt(r) if r <= round + 1 => {
                    sched[u] = Sched::Active;
                    active.push(u);
                }
                Control::WakeAt(r) => {
                    sched[u] = Sched::Wake(r);
                    wakes.push(Reverse((r, u)));
                }
                Control::Idle => sched[u] = Sched::Idle,
            }
        }
        stats.executed_rounds += 1;
        if sent > 0 {
            stats.per_round_message_counts.resize(round as usize - 1, 0);
            stats.per_round_message_counts.push(sent);
            stats.messages_sent += sent;
            stats.rounds = round;
            queue_peak = queue_peak.max(1);
        }
        std::mem::swap(&mut inbox, &mut next_inbox);
        std::mem::swap(&mut mail, &mut next_mail);
        next_mail.clear();
        round += 1;
    }
    stats.max_edge_congestion = queue_peak;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphSpec};

    struct Word(u64);
    impl Payload for Word {
        fn bits(&self, c: &BitCost) -> u32 {
            c.node_id()
        }
    }

    fn cfg(n: usize) -> CongestConfig {
        CongestConfig::new(1, BitCost::new(n, 16, 8))
    }

    struct Silent;
    impl CongestProgram for Silent {
        type Msg = Word;
        fn step(&mut self, _: &mut Ctx<'_, Word>) -> Control {
            Control::Idle
        }
    }

    #[test]
    fn silent_program_halts_in_round_one() {
        let g = generate(&GraphSpec::Clique { n: 4 }).unwrap();
        let stats = run_congest(&g, &mut [Silent, Silent, Silent, Silent], &cfg(4)).unwrap();
        assert_eq!(stats.executed_rounds, 1);
        assert_eq!(stats.rounds, 0);
        assert_eq!(stats.messages_sent, 0);
    }

    struct PingPong {
        got_back: Option<u64>,
    }
    impl CongestProgram for PingPong {
        type Msg = Word;
        fn step(&mut self, ctx: &mut Ctx<'_, Word>) -> Control {
            let me = ctx.node();
            if ctx.round() == 1 && me == 0 {
                ctx.send(1, Word(42));
            }
            let inbox: Vec<u64> = ctx.inbox().iter().map(|(_, w)| w.0).collect();
            for w in inbox {
                if me == 1 {
                    ctx.send(0, Word(w));
                } else {
                    self.got_back = Some(ctx.round());
                }
            }
            Control::Idle
        }
    }

    #[test]
    fn ping_pong_returns_after_two_rounds() {
        let g = generate(&GraphSpec::Clique { n: 2 }).unwrap();
        let mut nodes = [PingPong { got_back: None }, PingPong { got_back: None }];
        let stats = run_congest(&g, &mut nodes, &cfg(2)).unwrap();
        assert_eq!(stats.rounds, 2);
        assert_eq!(nodes[0].got_back, Some(3));
        assert_eq!(stats.messages_sent, 2);
    }

    struct Flood {
        best: usize,
        learned_at: u64,
        changed: bool,
    }
    impl CongestProgram for Flood {
        type Msg = Word;
        fn step(&mut self, ctx: &mut Ctx<'_, Word>) -> Control {
            for &(_, Word(x)) in ctx.inbox() {
                if (x as usize) < self.best {
                    self.best = x as usize;
                    self.learned_at = ctx.round() - 1;
                    self.changed = true;
                }
            }
            if self.changed {
                self.changed = false;
                for &w in ctx.neighbors() {
                    ctx.send(w, Word(self.best as u64));
                }
            }
            Control::Idle
        }
    }

    #[test]
    fn min_id_flooding_on_path_takes_seven_rounds() {
        let g = generate(&GraphSpec::Path { n: 8 }).unwrap();
        let mut nodes: Vec<Flood> = (0..8).map(|v| Flood { best: v, learned_at: 0, changed: true }).collect();
        let stats = run_congest(&g, &mut nodes, &cfg(8)).unwrap();
        let dist = g.bfs_distances(0);
        for (v, node) in nodes.iter().enumerate() {
            assert_eq!(node.best, 0);
            assert_eq!(node.learned_at, dist[v] as u64);
        }
        assert_eq!(nodes.iter().map(|f| f.learned_at).max(), Some(7));
        assert_eq!(stats.messages_sent, stats.per_round_message_counts.iter().sum::<u64>());
    }

    struct Rogue(u8);
    impl CongestProgram for Rogue {
        type Msg = Word;
        fn step(&mut self, ctx: &mut Ctx<'_, Word>) -> Control {
            if ctx.node() == 0 && ctx.round() == 2 {
                match self.0 {
                    0 => ctx.send(2, Word(1)),
                    1 => {
                        ctx.send(1, Word(1));
                        ctx.send(1, Word(2));
                    }
                    _ => ctx.send(1, Word(u64::MAX)),
                }
            }
            if ctx.round() < 2 {
                Control::Continue
            } else {
                Control::Idle
            }
        }
    }

    struct Huge;
    impl Payload for Huge {
        fn bits(&self, c: &BitCost) -> u32 {
            c.budget() + 1
        }
    }
    struct SendsHuge;
    impl CongestProgram for SendsHuge {
        type Msg = Huge;
        fn step(&mut self, ctx: &mut Ctx<'_, Huge>) -> Control {
            if ctx.node() == 1 {
                ctx.send(0, Huge);
            }
            Control::Idle
        }
    }

    #[test]
    fn violations_name_node_and_round() {
        let g = generate(&GraphSpec::Path { n: 3 }).unwrap();
        for mode in 0..2 {
            let err = run_congest(&g, &mut [Rogue(mode), Rogue(mode), Rogue(mode)], &cfg(3)).unwrap_err();
            assert!(matches!(err, Error::ProtocolViolation { node: 1, round: 2, .. }), "{err}");
        }
        let err = run_congest(&g, &mut [SendsHuge, SendsHuge, SendsHuge], &cfg(3)).unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation { node: 2, round: 1, .. }), "{err}");
    }

    struct Sleeper {
        woke: Vec<u64>,
    }
    impl CongestProgram for Sleeper {
        type Msg = Word;
        fn step(&mut self, ctx: &mut Ctx<'_, Word>) -> Control {
            self.woke.push(ctx.round());
            if ctx.round() == 1 {
                Control::WakeAt(1000)
            } else {
                Control::Idle
            }
        }
    }

    #[test]
    fn wake_ups_skip_empty_rounds_and_cap_is_reported() {
        let g = generate(&GraphSpec::Clique { n: 2 }).unwrap();
        let mut nodes = [Sleeper { woke: vec![] }, Sleeper { woke: vec![] }];
        let stats = run_congest(&g, &mut nodes, &cfg(2)).unwrap();
        assert_eq!(nodes[0].woke, vec![1, 1000]);
        assert_eq!(stats.executed_rounds, 2);
        assert!(!stats.hit_round_cap);
        let mut nodes = [Sleeper { woke: vec![] }, Sleeper { woke: vec![] }];
        let stats = run_congest(&g, &mut nodes, &cfg(2).with_round_cap(10)).unwrap();
        assert!(stats.hit_round_cap);
        assert_eq!(nodes[0].woke, vec![1]);
    }

    #[test]
    fn replay_is_deterministic() {
        use rand::Rng;
        struct Chatter(u64);
        impl CongestProgram for Chatter {
            type Msg = Word;
            fn step(&mut self, ctx: &mut Ctx<'_, Word>) -> Control {
                self.0 += ctx.inbox().iter().map(|(_, w)| w.0).sum::<u64>();
                if ctx.round() > 20 {
                    return Control::Idle;
                }
                let k = ctx.neighbors().len();
                let i = ctx.rng().gen_range(0..k);
                let pick = ctx.neighbors()[i];
                let x = ctx.rng().gen_range(0..100);
                ctx.send(pick, Word(x));
                Control::Continue
            }
        }
        let g = generate(&GraphSpec::RandomRegular { n: 20, d: 3, seed: 1 }).unwrap();
        let run = || {
            let mut nodes: Vec<Chatter> = (0..20).map(|_| Chatter(0)).collect();
            let s = run_congest(&g, &mut nodes, &cfg(20)).unwrap();
            (s, nodes.iter().map(|c| c.0).collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }
}
