use crate::engines::{bits_for, run_congest, BitCost, CongestConfig, CongestProgram, Control, Ctx, Payload, RoundStats};
use crate::error::Result;
use crate::graph::{Graph, Tree};

/// Leader, BFS tree and DFS-preorder identifiers, as computed in-network.
#[derive(Clone, Debug)]
pub struct LeaderSetup {
    pub leader: usize,
    pub tree: Tree,
    /// 1-based DFS identifier of each node.
    pub ids: Vec<usize>,
    /// Node holding each identifier (`node_at[id - 1]`).
    pub node_at: Vec<usize>,
    pub stats: RoundStats,
}

impl LeaderSetup {
    /// Inclusive identifier range of `v`'s subtree.
    pub fn id_range(&self, v: usize) -> (usize, usize) {
        (self.ids[v], self.ids[v] + self.tree.subtree_size(v) - 1)
    }
}

#[derive(Clone, Copy)]
struct Flood {
    root: usize,
    dist: usize,
}

impl Payload for Flood {
    fn bits(&self, c: &BitCost) -> u32 {
        c.node_id() + bits_for(c.n as u128)
    }
}

struct FloodNode {
    root: usize,
    dist: usize,
    parent: Option<usize>,
    dirty: bool,
}

impl CongestProgram for FloodNode {
    type Msg = Flood;
    fn step(&mut self, ctx: &mut Ctx<'_, Flood>) -> Control {
        for &(from, m) in ctx.inbox() {
            let offer = (m.root, m.dist + 1);
            if offer < (self.root, self.dist) {
                (self.root, self.dist, self.parent, self.dirty) = (m.root, m.dist + 1, Some(from), true);
            } else if offer == (self.root, self.dist) && self.parent.is_some_and(|p| from < p) {
                self.parent = Some(from);
            }
        }
        if self.dirty {
            self.dirty = false;
            let msg = Flood { root: self.root, dist: self.dist };
            for &w in ctx.neighbors() {
                ctx.send(w, msg);
            }
        }
        Control::Idle
    }
}

#[derive(Clone, Copy)]
struct Count(usize);

impl Payload for Count {
    fn bits(&self, c: &BitCost) -> u32 {
        bits_for(c.n as u128 + 1)
    }
}

struct Notify {
    parent: Option<usize>,
    children: Vec<usize>,
}

impl CongestProgram for Notify {
    type Msg = Count;
    fn step(&mut self, ctx: &mut Ctx<'_, Count>) -> Control {
        self.children.extend(ctx.inbox().iter().map(|&(from, _)| from));
        if ctx.round() == 1 {
            if let Some(p) = self.parent {
                ctx.send(p, Count(0));
            }
        }
        Control::Idle
    }
}

struct SizeUp {
    parent: Option<usize>,
    waiting: usize,
    size: usize,
    child_sizes: Vec<(usize, usize)>,
}

impl CongestProgram for SizeUp {
    type Msg = Count;
    fn step(&mut self, ctx: &mut Ctx<'_, Count>) -> Control {
        for &(from, Count(s)) in ctx.inbox() {
            self.child_sizes.push((from, s));
            self.size += s;
            self.waiting -= 1;
        }
        if self.waiting == 0 {
            if let Some(p) = self.parent.take() {
                ctx.send(p, Count(self.size));
            }
        }
        Control::Idle
    }
}

struct IdDown {
    id: Option<usize>,
    child_sizes: Vec<(usize, usize)>,
}

impl CongestProgram for IdDown {
    type Msg = Count;
    fn step(&mut self, ctx: &mut Ctx<'_, Count>) -> Control {
        if let Some(&(_, Count(start))) = ctx.inbox().first() {
            self.id = Some(start);
        }
        if let Some(id) = self.id.filter(|_| !self.child_sizes.is_empty()) {
            self.child_sizes.sort_unstable();
            let mut next = id + 1;
            for (c, s) in std::mem::take(&mut self.child_sizes) {
                ctx.send(c, Count(next));
                next += s;
            }
        }
        Control::Idle
    }
}

/// Min-identifier flooding builds a BFS tree around the minimum identifier,
/// children report to parents, subtree sizes converge upward, and DFS
/// preorder identifiers flow back down.
pub fn elect_leader_and_ids(g: &Graph, cfg: &CongestConfig) -> Result<LeaderSetup> {
    let n = g.n();
    let mut stats = RoundStats::default();

    let mut flood: Vec<FloodNode> =
        (0..n).map(|v| FloodNode { root: v, dist: 0, parent: None, dirty: true }).collect();
    stats.absorb(&run_congest(g, &mut flood, cfg)?);
    let leader = flood[0].root;
    let parents: Vec<Option<usize>> = flood.iter().map(|f| f.parent).collect();

    let mut notify: Vec<Notify> = parents.iter().map(|&parent| Notify { parent, children: Vec::new() }).collect();
    stats.absorb(&run_congest(g, &mut notify, cfg)?);

    let mut sizes: Vec<SizeUp> = notify
        .iter()
        .map(|nd| SizeUp { parent: nd.parent, waiting: nd.children.len(), size: 1, child_sizes: Vec::new() })
        .collect();
    stats.absorb(&run_congest(g, &mut sizes, cfg)?);

    let mut down: Vec<IdDown> = sizes
        .into_iter()
        .enumerate()
        .map(|(v, s)| IdDown { id: (v == leader).then_some(1), child_sizes: s.child_sizes })
        .collect();
    stats.absorb(&run_congest(g, &mut down, cfg)?);

    let ids: Vec<usize> = down.iter().map(|d| d.id.expect("every node receives an identifier")).collect();
    let mut node_at = vec![usize::MAX; n];
    for (v, &id) in ids.iter().enumerate() {
        node_at[id - 1] = v;
    }
    Ok(LeaderSetup { leader, tree: Tree::from_parents(leader, parents), ids, node_at, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bfs_tree, generate};

    fn setup(spec: &str) -> (Graph, LeaderSetup) {
        let g = generate(&spec.parse().unwrap()).unwrap();
        let cfg = CongestConfig::new(1, BitCost::new(g.n(), 16, 8));
        let s = elect_leader_and_ids(&g, &cfg).unwrap();
        (g, s)
    }

    #[test]
    fn path_ids_follow_preorder() {
        let (_, s) = setup("path:4");
        assert_eq!(s.leader, 0);
        assert_eq!(s.ids, vec![1, 2, 3, 4]);
        assert!(s.stats.rounds <= 3 * 3 + 2);
    }

    #[test]
    fn star_with_offset_hub() {
        let (_, s) = setup("star:7:3");
        assert_eq!(s.leader, 0);
        let mut ids = s.ids.clone();
        ids.sort_unstable();
        assert_eq!(ids, (1..=7).collect::<Vec<_>>());
        assert_eq!(s.tree.depth(), 2);
    }

    #[test]
    fn matches_centralized_bfs_and_preorder() {
        for spec in ["random-regular:128:4:3", "dumbbell:5:3", "blackboard:3:4", "cycle:17"] {
            let (g, s) = setup(spec);
            let reference = bfs_tree(&g, 0);
            assert_eq!(s.tree, reference, "{spec}");
            assert_eq!(s.ids, reference.dfs_ids(), "{spec}");
            let mut seen = vec![false; g.n()];
            for &v in &s.node_at {
                assert!(!seen[v]);
                seen[v] = true;
            }
            let d = g.diameter() as u64;
            assert!(s.stats.rounds <= 3 * d + 2, "{spec}: {} rounds, diameter {d}", s.stats.rounds);
        }
    }
}
