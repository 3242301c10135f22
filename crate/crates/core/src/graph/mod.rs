//! Undirected topologies, generators, BFS trees and lazy-walk mixing times.

mod generate;
mod mixing;
mod tree;

pub use generate::{generate, GraphSpec};
pub use mixing::{lazy_step, mixing_profile, mixing_time, walk_distribution, walk_matrix, MixingProfile, Threshold};
pub use tree::{bfs_tree, Tree};

use crate::error::{invalid, Error, Result};
use std::collections::VecDeque;

/// Connected simple undirected graph on nodes `0..n` (identifier = index + 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// Builds a graph from an edge list over `0..n`, rejecting self-loops,
    /// parallel edges and disconnected results.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one node"));
        }
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({}, {}) out of range", u + 1, v + 1)));
            }
            if u == v {
                return Err(invalid(format!("self-loop at node {}", u + 1)));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut m2 = 0;
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!("parallel edge at node {}", u + 1)));
            }
            m2 += list.len();
        }
        let g = Graph { adj, m: m2 / 2 };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Position of `v` in the sorted neighbor list of `u`.
    pub fn neighbor_slot(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].binary_search(&v).ok()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Each edge once, as (smaller, larger).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Hop distances from `src`; unreachable nodes get `usize::MAX`.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::from([src]);
        dist[src] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|&d| d != usize::MAX)
    }

    pub fn eccentricity(&self, v: usize) -> usize {
        self.bfs_distances(v).into_iter().max().unwrap_or(0)
    }

    /// Exact diameter by all-pairs BFS.
    pub fn diameter(&self) -> usize {
        (0..self.n()).map(|v| self.eccentricity(v)).max().unwrap_or(0)
    }

    /// The spanning tree of `tree` viewed as a graph of its own.
    pub fn from_tree(tree: &Tree) -> Result<Self> {
        let edges: Vec<_> = (0..tree.n())
            .filter_map(|v| tree.parent(v).map(|p| (p, v)))
            .collect();
        Graph::from_edges(tree.n(), edges)
    }

    /// Parses the edge-list format: header `n m`, then `m` lines `u v`, 1-based.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let [n, m] = parse_pair(header)?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let [u, v] = parse_pair(line)?;
            if u == 0 || v == 0 {
                return Err(Error::Parse(format!("node ids are 1-based: `{line}`")));
            }
            edges.push((u - 1, v - 1));
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("header declares {m} edges, found {}", edges.len())));
        }
        Graph::from_edges(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }
}

fn parse_pair(line: &str) -> Result<[usize; 2]> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok([a, b]),
        _ => Err(Error::Parse(format!("expected two integers: `{line}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(3, [(0, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(matches!(Graph::from_edges(3, [(0, 1)]), Err(Error::Disconnected)));
        assert!(Graph::from_edges(2, [(0, 2)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::parse_edge_list("4 3\n1 2\n2 3\n3 4\n").unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(g.diameter(), 3);
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
        assert!(Graph::parse_edge_list("3 3\n1 2\n2 3\n").is_err());
        assert!(Graph::parse_edge_list("2 1\n0 1\n").is_err());
    }
}
