use crate::engines::{run_congest, BitCost, CongestConfig, CongestProgram, Control, Ctx, Payload, RoundStats};
use crate::error::Result;
use crate::graph::{Graph, Tree};
use std::collections::VecDeque;

/// A fixed-width word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Word {
    pub value: u64,
    pub width: u32,
}

impl Payload for Word {
    fn bits(&self, _: &BitCost) -> u32 {
        self.width
    }
}

struct Downcast<M> {
    children: Vec<usize>,
    pending: VecDeque<M>,
    received: Vec<M>,
}

impl<M: Payload + Clone> CongestProgram for Downcast<M> {
    type Msg = M;
    fn step(&mut self, ctx: &mut Ctx<'_, M>) -> Control {
        for (_, m) in ctx.take_inbox() {
            self.received.push(m.clone());
            if !self.children.is_empty() {
                self.pending.push_back(m);
            }
        }
        if let Some(m) = self.pending.pop_front() {
            for &c in &self.children {
                ctx.send(c, m.clone());
            }
        }
        if self.pending.is_empty() {
            Control::Idle
        } else {
            Control::Continue
        }
    }
}

/// Streams `items` from the root down the tree, one item per round on
/// every edge; returns what each non-root node received (the root's entry
/// is `items` itself). Takes depth + len − 1 rounds.
pub fn broadcast_items<M: Payload + Clone>(
    g: &Graph,
    tree: &Tree,
    items: Vec<M>,
    cfg: &CongestConfig,
) -> Result<(Vec<Vec<M>>, RoundStats)> {
    let mut nodes: Vec<Downcast<M>> = (0..g.n())
        .map(|v| Downcast { children: tree.children(v).to_vec(), pending: VecDeque::new(), received: Vec::new() })
        .collect();
    nodes[tree.root()].pending = items.iter().cloned().collect();
    let stats = run_congest(g, &mut nodes, cfg)?;
    let mut out: Vec<Vec<M>> = nodes.into_iter().map(|d| d.received).collect();
    out[tree.root()] = items;
    Ok((out, stats))
}

/// Broadcasts `words` of `width` bits each; every node ends with all of them.
pub fn broadcast_words(
    g: &Graph,
    tree: &Tree,
    words: &[u64],
    width: u32,
    cfg: &CongestConfig,
) -> Result<(Vec<Vec<u64>>, RoundStats)> {
    let items = words.iter().map(|&value| Word { value, width }).collect();
    let (got, stats) = broadcast_items(g, tree, items, cfg)?;
    Ok((got.into_iter().map(|ws| ws.into_iter().map(|w| w.value).collect()).collect(), stats))
}

struct Gather<M> {
    parent: Option<usize>,
    queue: VecDeque<M>,
    collected: Vec<M>,
}

impl<M: Payload> CongestProgram for Gather<M> {
    type Msg = M;
    fn step(&mut self, ctx: &mut Ctx<'_, M>) -> Control {
        match self.parent {
            None => self.collected.extend(ctx.take_inbox().map(|(_, m)| m)),
            Some(p) => {
                self.queue.extend(ctx.take_inbox().map(|(_, m)| m));
                ctx.note_queue(self.queue.len());
                if let Some(m) = self.queue.pop_front() {
                    ctx.send(p, m);
                }
            }
        }
        if self.queue.is_empty() {
            Control::Idle
        } else {
            Control::Continue
        }
    }
}

/// Forwards every node's items to the root through FIFO queues, one message
/// per edge per round; returns the root's own items followed by arrivals.
pub fn gather_to_root<M: Payload>(
    g: &Graph,
    tree: &Tree,
    items: Vec<Vec<M>>,
    cfg: &CongestConfig,
) -> Result<(Vec<M>, RoundStats)> {
    let mut nodes: Vec<Gather<M>> = items
        .into_iter()
        .enumerate()
        .map(|(v, own)| Gather { parent: tree.parent(v), queue: own.into(), collected: Vec::new() })
        .collect();
    let root = tree.root();
    let own: Vec<M> = nodes[root].queue.drain(..).collect();
    let stats = run_congest(g, &mut nodes, cfg)?;
    let mut all = own;
    all.append(&mut nodes[root].collected);
    Ok((all, stats))
}
