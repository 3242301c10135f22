use super::Graph;
use crate::error::{Error, Result};

/// Iteration cap for the dense power iteration.
const MAX_STEPS: usize = 1_000_000;

/// Pointwise closeness target for lazy-walk distributions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// |P^t_u(v) − π(v)| ≤ π(v)/n.
    Exact,
    /// |P^t_u(v) − π(v)| ≤ λ.
    Lambda(f64),
}

/// Mixing times of the lazy walk for the exact threshold and a set of λ values.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingProfile {
    pub tau_exact: usize,
    /// (λ, τ(λ)) in the order requested.
    pub tau_at: Vec<(f64, usize)>,
}

impl MixingProfile {
    pub fn tau(&self, lambda: f64) -> Option<usize> {
        self.tau_at.iter().find(|(l, _)| *l == lambda).map(|&(_, t)| t)
    }
}

/// One lazy-walk step: stay with probability 1/2, else move to a uniform neighbor.
pub fn lazy_step(g: &Graph, dist: &[f64], out: &mut [f64]) {
    for v in 0..g.n() {
        let moved: f64 = g.neighbors(v).iter().map(|&w| dist[w] / g.degree(w) as f64).sum();
        out[v] = 0.5 * dist[v] + 0.5 * moved;
    }
}

/// P^t_start as a dense vector.
pub fn walk_distribution(g: &Graph, start: usize, t: usize) -> Vec<f64> {
    let mut cur = vec![0.0; g.n()];
    cur[start] = 1.0;
    let mut next = vec![0.0; g.n()];
    for _ in 0..t {
        lazy_step(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// All rows P^t_u, row-major `n × n`.
pub fn walk_matrix(g: &Graph, t: usize) -> Vec<f64> {
    let n = g.n();
    let mut cur = identity(n);
    let mut next = vec![0.0; n * n];
    for _ in 0..t {
        step_all(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Smallest t meeting `threshold` from every start node.
pub fn mixing_time(g: &Graph, threshold: Threshold) -> Result<usize> {
    match threshold {
        Threshold::Exact => Ok(mixing_profile(g, &[])?.tau_exact),
        Threshold::Lambda(l) => Ok(mixing_profile(g, &[l])?.tau_at[0].1),
    }
}

/// Dense iteration from every start until the exact threshold and every
/// requested λ threshold are met.
pub fn mixing_profile(g: &Graph, lambdas: &[f64]) -> Result<MixingProfile> {
    if let Some(&bad) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(crate::error::invalid(format!("mixing threshold must be positive, got {bad}")));
    }
    let n = g.n();
    let two_m = (2 * g.m()).max(1) as f64;
    let pi: Vec<f64> = (0..n).map(|v| g.degree(v) as f64 / two_m).collect();
    if n == 1 {
        return Ok(MixingProfile { tau_exact: 0, tau_at: lambdas.iter().map(|&l| (l, 0)).collect() });
    }
    let mut tau_exact = None;
    let mut tau_at: Vec<Option<usize>> = vec![None; lambdas.len()];
    let mut cur = identity(n);
    let mut next = vec![0.0; n * n];
    for t in 0..=MAX_STEPS {
        let (dev, excess) = deviations(&cur, &pi, n);
        if tau_exact.is_none() && excess <= 0.0 {
            tau_exact = Some(t);
        }
        for (slot, &l) in tau_at.iter_mut().zip(lambdas) {
            if slot.is_none() && dev <= l {
                *slot = Some(t);
            }
        }
        if tau_exact.is_some() && tau_at.iter().all(Option::is_some) {
            return Ok(MixingProfile {
                tau_exact: tau_exact.unwrap(),
                tau_at: lambdas.iter().zip(tau_at).map(|(&l, t)| (l, t.unwrap())).collect(),
            });
        }
        step_all(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Err(Error::CapExceeded { what: "mixing-time iteration", cap: MAX_STEPS as u64 })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for u in 0..n {
        m[u * n + u] = 1.0;
    }
    m
}

/// Applies one lazy step to every row.
fn step_all(g: &Graph, cur: &[f64], next: &mut [f64]) {
    let n = g.n();
    let inv_deg: Vec<f64> = (0..n).map(|v| 1.0 / g.degree(v) as f64).collect();
    let mut share = vec![0.0; n];
    for (row, out) in cur.chunks_exact(n).zip(next.chunks_exact_mut(n)) {
        for w in 0..n {
            share[w] = row[w] * inv_deg[w];
        }
        for v in 0..n {
            let moved: f64 = g.neighbors(v).iter().map(|&w| share[w]).sum();
            out[v] = 0.5 * row[v] + 0.5 * moved;
        }
    }
}

/// (max |P − π|, max (|P − π| − π/n)) over all entries.
fn deviations(mat: &[f64], pi: &[f64], n: usize) -> (f64, f64) {
    let inv_n = 1.0 / n as f64;
    let mut dev = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    for row in mat.chunks_exact(n) {
        for v in 0..n {
            let d = (row[v] - pi[v]).abs();
            dev = dev.max(d);
            excess = excess.max(d - pi[v] * inv_n);
        }
    }
    (dev, excess)
}
