use super::Graph;
use crate::error::{invalid, Error, Result};
use crate::rng::{run_rng, tag};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

const REGULAR_ATTEMPTS: u32 = 200;

/// Recipe for a topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphSpec {
    Clique { n: usize },
    Path { n: usize },
    Cycle { n: usize },
    /// Star with the hub at 1-based identifier `hub` (default 1).
    Star {
        n: usize,
        #[serde(default)]
        hub: Option<usize>,
    },
    RandomRegular {
        n: usize,
        d: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Two cliques of `side` nodes joined through a chain of `bridge` extra nodes.
    Dumbbell { side: usize, bridge: usize },
    /// `parts` cliques of `part_size` nodes, each with one edge to a shared
    /// blackboard node (the last identifier).
    Blackboard { parts: usize, part_size: usize },
    EdgeList { path: PathBuf },
}

impl FromStr for GraphSpec {
    type Err = Error;

    /// Parses `family:arg:arg`, e.g. `clique:16`, `random-regular:64:8:7`,
    /// `dumbbell:3:2`, `blackboard:4:5`, `star:10:3`, `file:graph.txt`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        if family == "file" || family == "edge-list" {
            return Ok(GraphSpec::EdgeList { path: rest.into() });
        }
        let args: Vec<u64> = rest
            .split(':')
            .filter(|a| !a.is_empty())
            .map(|a| a.parse().map_err(|_| Error::Parse(format!("bad graph argument `{a}` in `{s}`"))))
            .collect::<Result<_>>()?;
        let arg = |i: usize| {
            args.get(i)
                .map(|&v| v as usize)
                .ok_or_else(|| Error::Parse(format!("graph `{s}` is missing argument {}", i + 1)))
        };
        Ok(match family {
            "clique" => GraphSpec::Clique { n: arg(0)? },
            "path" => GraphSpec::Path { n: arg(0)? },
            "cycle" => GraphSpec::Cycle { n: arg(0)? },
            "star" => GraphSpec::Star { n: arg(0)?, hub: arg(1).ok() },
            "random-regular" => GraphSpec::RandomRegular {
                n: arg(0)?,
                d: arg(1)?,
                seed: args.get(2).copied().unwrap_or(0),
            },
            "dumbbell" => GraphSpec::Dumbbell { side: arg(0)?, bridge: arg(1)? },
            "blackboard" => GraphSpec::Blackboard { parts: arg(0)?, part_size: arg(1)? },
            other => return Err(Error::Parse(format!("unknown graph family `{other}`"))),
        })
    }
}

/// Builds the graph described by `spec`; deterministic for a given seed.
pub fn generate(spec: &GraphSpec) -> Result<Graph> {
    match *spec {
        GraphSpec::Clique { n } => {
            positive(n, "n")?;
            Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
        }
        GraphSpec::Path { n } => {
            positive(n, "n")?;
            Graph::from_edges(n, (1..n).map(|v| (v - 1, v)))
        }
        GraphSpec::Cycle { n } => {
            if n < 3 {
                return Err(invalid("cycle needs n >= 3"));
            }
            Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
        }
        GraphSpec::Star { n, hub } => {
            positive(n, "n")?;
            let hub = hub.unwrap_or(1);
            if hub == 0 || hub > n {
                return Err(invalid(format!("star hub {hub} outside 1..={n}")));
            }
            Graph::from_edges(n, (0..n).filter(|&v| v != hub - 1).map(|v| (hub - 1, v)))
        }
        GraphSpec::RandomRegular { n, d, seed } => random_regular(n, d, seed),
        GraphSpec::Dumbbell { side, bridge } => {
            positive(side, "side")?;
            let n = 2 * side + bridge;
            let mut edges = clique_edges(0, side);
            edges.extend(clique_edges(side + bridge, side));
            let chain: Vec<usize> = std::iter::once(0)
                .chain(side..side + bridge)
                .chain(std::iter::once(side + bridge))
                .collect();
            edges.extend(chain.windows(2).map(|w| (w[0], w[1])));
            Graph::from_edges(n, edges)
        }
        GraphSpec::Blackboard { parts, part_size } => {
            positive(parts, "parts")?;
            positive(part_size, "part_size")?;
            let board = parts * part_size;
            let mut edges = Vec::new();
            for p in 0..parts {
                edges.extend(clique_edges(p * part_size, part_size));
                edges.push((p * part_size, board));
            }
            Graph::from_edges(board + 1, edges)
        }
        GraphSpec::EdgeList { ref path } => Graph::parse_edge_list(&std::fs::read_to_string(path)?),
    }
}

fn positive(x: usize, name: &str) -> Result<()> {
    if x == 0 {
        Err(invalid(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

fn clique_edges(start: usize, size: usize) -> Vec<(usize, usize)> {
    (start..start + size)
        .flat_map(|u| (u + 1..start + size).map(move |v| (u, v)))
        .collect()
}

/// Pairing model with per-step rejection of loops and repeated edges;
/// a stuck or disconnected pairing restarts from scratch.
fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d < 3 || d >= n || (n * d) % 2 == 1 {
        return Err(invalid(format!("random-regular needs 3 <= d < n and n*d even (n={n}, d={d})")));
    }
    let mut rng = run_rng(seed, &[tag::GRAPH, n as u64, d as u64]);
    for _ in 0..REGULAR_ATTEMPTS {
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
        let mut seen = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        let mut stuck = false;
        while !points.is_empty() {
            let mut placed = false;
            for _ in 0..50 * points.len() {
                let i = rng.gen_range(0..points.len());
                let j = rng.gen_range(0..points.len());
                let (u, v) = (points[i], points[j]);
                if u == v || seen.contains(&(u.min(v), u.max(v))) {
                    continue;
                }
                seen.insert((u.min(v), u.max(v)));
                edges.push((u, v));
                points.swap_remove(i.max(j));
                points.swap_remove(i.min(j));
                placed = true;
                break;
            }
            if !placed {
                stuck = true;
                break;
            }
        }
        if stuck {
            continue;
        }
        match Graph::from_edges(n, edges) {
            Ok(g) => return Ok(g),
            Err(Error::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed(REGULAR_ATTEMPTS))
}
