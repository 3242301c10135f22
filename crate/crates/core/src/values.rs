//! Per-node value assignments and their frequency vectors.

use crate::error::{invalid, Result};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `val(v) ∈ [1, N]` or NULL for each node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueAssignment {
    vals: Vec<Option<u64>>,
    universe: u64,
}

impl ValueAssignment {
    pub fn new(vals: Vec<Option<u64>>, universe: u64) -> Result<Self> {
        if universe == 0 {
            return Err(invalid("universe size N must be at least 1"));
        }
        if let Some((v, x)) = vals
            .iter()
            .enumerate()
            .find_map(|(v, x)| x.filter(|&x| x == 0 || x > universe).map(|x| (v, x)))
        {
            return Err(invalid(format!("node {} holds {x}, outside 1..={universe}", v + 1)));
        }
        Ok(Self { vals, universe })
    }

    pub fn n(&self) -> usize {
        self.vals.len()
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn get(&self, v: usize) -> Option<u64> {
        self.vals[v]
    }

    pub fn as_slice(&self) -> &[Option<u64>] {
        &self.vals
    }

    pub fn non_empty(&self) -> usize {
        self.vals.iter().filter(|x| x.is_some()).count()
    }

    pub fn frequencies(&self) -> FrequencyVector {
        let mut counts = BTreeMap::new();
        for x in self.vals.iter().flatten() {
            *counts.entry(*x).or_insert(0u64) += 1;
        }
        FrequencyVector { counts }
    }

    /// Parses `nodeId value` lines (1-based ids); unlisted nodes are NULL.
    /// `n` defaults to the largest id and `universe` to the largest value.
    pub fn parse_instance(text: &str, n: Option<usize>, universe: Option<u64>) -> Result<Self> {
        let mut pairs = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut it = line.split_whitespace();
            let parsed = (it.next().map(str::parse::<usize>), it.next().map(str::parse::<u64>), it.next());
            match parsed {
                (Some(Ok(id)), Some(Ok(x)), None) if id >= 1 => pairs.push((id, x)),
                _ => return Err(crate::Error::Parse(format!("expected `nodeId value`: `{line}`"))),
            }
        }
        let n = n.unwrap_or_else(|| pairs.iter().map(|p| p.0).max().unwrap_or(0));
        let universe = universe.unwrap_or_else(|| pairs.iter().map(|p| p.1).max().unwrap_or(1));
        let mut vals = vec![None; n];
        for (id, x) in pairs {
            let slot = vals
                .get_mut(id - 1)
                .ok_or_else(|| invalid(format!("node id {id} exceeds n={n}")))?;
            if slot.replace(x).is_some() {
                return Err(invalid(format!("node id {id} listed twice")));
            }
        }
        Self::new(vals, universe)
    }
}

/// Occurrence counts f_i of each present value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequencyVector {
    counts: BTreeMap<u64, u64>,
}

impl FrequencyVector {
    pub fn from_counts(counts: impl IntoIterator<Item = (u64, u64)>) -> Self {
        Self { counts: counts.into_iter().filter(|&(_, c)| c > 0).collect() }
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    /// (value, count) in increasing value order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }

    pub fn f0(&self) -> u64 {
        self.counts.len() as u64
    }

    pub fn f1(&self) -> u64 {
        self.counts.values().sum()
    }

    /// F_p = Σ f_i^p exactly; F_0 counts distinct values.
    pub fn moment(&self, p: u32) -> BigUint {
        self.counts.values().map(|&c| BigUint::from(c).pow(p)).sum()
    }

    pub fn moment_f64(&self, p: u32) -> f64 {
        self.counts.values().map(|&c| (c as f64).powi(p as i32)).sum()
    }

    /// −Σ (f_i/F₁)·ln(f_i/F₁); 0 for an empty vector.
    pub fn entropy(&self) -> f64 {
        let f1 = self.f1() as f64;
        self.counts
            .values()
            .map(|&c| {
                let q = c as f64 / f1;
                -q * q.ln()
            })
            .sum()
    }

    /// The k most frequent values, count descending then value ascending.
    pub fn top_k(&self, k: usize) -> Vec<(u64, u64)> {
        let mut all: Vec<(u64, u64)> = self.iter().collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}
