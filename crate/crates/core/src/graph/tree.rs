use super::Graph;
use std::collections::VecDeque;

/// Rooted spanning tree with levels, subtree sizes and ordered children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    level: Vec<usize>,
    subtree: Vec<usize>,
    depth: usize,
}

/// BFS tree where each node's parent is its smallest-index neighbor one level up.
pub fn bfs_tree(g: &Graph, root: usize) -> Tree {
    let dist = g.bfs_distances(root);
    let parent = (0..g.n())
        .map(|v| {
            if v == root {
                None
            } else {
                g.neighbors(v).iter().copied().find(|&w| dist[w] + 1 == dist[v])
            }
        })
        .collect();
    Tree::from_parents(root, parent)
}

impl Tree {
    /// Builds a tree from parent pointers; panics if they do not form a tree rooted at `root`.
    pub fn from_parents(root: usize, parent: Vec<Option<usize>>) -> Tree {
        let n = parent.len();
        assert!(parent[root].is_none(), "root has a parent");
        let mut children = vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(v);
            }
        }
        let mut level = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        level[root] = 0;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &c in &children[u] {
                level[c] = level[u] + 1;
                queue.push_back(c);
            }
        }
        assert_eq!(order.len(), n, "parent pointers do not span a tree");
        let mut subtree = vec![1; n];
        for &u in order.iter().rev() {
            if let Some(p) = parent[u] {
                subtree[p] += subtree[u];
            }
        }
        let depth = level.iter().copied().max().unwrap_or(0);
        Tree { root, parent, children, level, subtree, depth }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Children in increasing index order.
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    pub fn subtree_size(&self, v: usize) -> usize {
        self.subtree[v]
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Nodes in DFS preorder, visiting children in increasing index order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children[u].iter().rev());
        }
        out
    }

    /// 1-based DFS preorder rank of every node.
    pub fn dfs_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.n()];
        for (i, v) in self.preorder().into_iter().enumerate() {
            ids[v] = i + 1;
        }
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    fn graph(s: &str) -> Graph {
        generate(&s.parse().unwrap()).unwrap()
    }

    #[test]
    fn star_and_path_depths() {
        let t = bfs_tree(&graph("star:9"), 0);
        assert_eq!(t.depth(), 1);
        assert!((1..9).all(|v| t.level(v) == 1 && t.parent(v) == Some(0)));
        let p = bfs_tree(&graph("path:5"), 0);
        assert_eq!(p.depth(), 4);
        assert_eq!(p.subtree_size(0), 5);
        assert_eq!(p.dfs_ids(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn depth_brackets_diameter() {
        let g = graph("random-regular:64:8:7");
        let t = bfs_tree(&g, 0);
        let diam = g.diameter();
        assert!(t.depth() <= diam && diam <= 2 * t.depth());
        assert_eq!(t.subtree_size(0), 64);
        let ids = t.dfs_ids();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (1..=64).collect::<Vec<_>>());
    }

    #[test]
    fn dfs_ranges_are_contiguous() {
        let g = graph("random-regular:40:3:2");
        let t = bfs_tree(&g, 5);
        let ids = t.dfs_ids();
        for v in 0..40 {
            for &c in t.children(v) {
                assert!(ids[c] > ids[v] && ids[c] + t.subtree_size(c) <= ids[v] + t.subtree_size(v));
            }
        }
    }
}
