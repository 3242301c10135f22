use super::push_sum::{push_sum, push_sum_rounds};
use super::Runs;
use crate::constants::{log2n, Constants};
use crate::engines::{bits_for, BitCost, Delivery, GossipAction, GossipCtx, GossipProgram, PartnerSampler, Payload, RoundStats};
use crate::error::Result;
use crate::values::ValueAssignment;
use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Token {
    value: u64,
    weight: u64,
    weight_bits: u32,
}

impl Payload for Token {
    fn bits(&self, c: &BitCost) -> u32 {
        c.value() + self.weight_bits
    }
}

struct Splitter {
    tokens: Vec<Token>,
}

impl GossipProgram for Splitter {
    type Msg = Token;
    fn step(&mut self, ctx: &mut GossipCtx<'_, Token>) -> GossipAction<Token> {
        for d in ctx.take_inbox() {
            if let Delivery::Pushed { msg, .. } = d {
                self.tokens.push(msg);
            }
        }
        match self.tokens.iter_mut().find(|t| t.weight > 1) {
            Some(t) => {
                let half = t.weight / 2;
                t.weight -= half;
                let action = GossipAction::push(Token { weight: half, ..t.clone() });
                if self.tokens.iter().any(|t| t.weight > 1) {
                    action
                } else {
                    action.halting()
                }
            }
            None => GossipAction::halt(),
        }
    }
}

struct Distributor {
    settled: Option<Token>,
    surplus: VecDeque<Token>,
}

impl GossipProgram for Distributor {
    type Msg = Token;
    fn step(&mut self, ctx: &mut GossipCtx<'_, Token>) -> GossipAction<Token> {
        let mut arrivals: Vec<Token> = ctx
            .take_inbox()
            .filter_map(|d| match d {
                Delivery::Pushed { msg, .. } => Some(msg),
                _ => None,
            })
            .collect();
        if self.settled.is_none() && arrivals.len() == 1 {
            self.settled = arrivals.pop();
        }
        self.surplus.extend(arrivals);
        match self.surplus.pop_front() {
            Some(t) if self.surplus.is_empty() => GossipAction::push(t).halting(),
            Some(t) => GossipAction::push(t),
            None => GossipAction::halt(),
        }
    }
}

/// Outcome of duplication preprocessing.
#[derive(Clone, Debug)]
pub struct Duplication {
    pub vals: ValueAssignment,
    /// Non-empty count z as learned by push-sum.
    pub z: u64,
    /// ⌈(n/3)/z⌉, or 1 when z ≥ n/3 and nothing changes.
    pub factor: u64,
    pub stats: RoundStats,
}

/// Multiplies every frequency by ⌈(n/3)/z⌉ when fewer than n/3 nodes hold
/// a value. Each non-empty node makes a token (value, factor); tokens are
/// halved and scattered to random nodes until all weights are 1, then
/// surplus tokens are pushed on until each rests alone on a node that was
/// empty, where success needs no other token landing there that round.
pub fn preprocess_duplicate<S>(sampler: &mut S, vals: &ValueAssignment, seed: u64, consts: &Constants) -> Result<Duplication>
where
    S: PartnerSampler + ?Sized,
{
    let n = vals.n();
    let ones: Vec<u64> = (0..n).map(|v| u64::from(vals.get(v).is_some())).collect();
    let count = push_sum(sampler, &ones, n as u64, push_sum_rounds(n, n as u64, consts), seed, consts)?;
    let mut stats = count.stats.clone();
    let z = count.rounded(0);
    if z == 0 || 3 * z >= n as u64 {
        return Ok(Duplication { vals: vals.clone(), z, factor: 1, stats });
    }
    let factor = (n as u64).div_ceil(3 * z);
    let weight_bits = bits_for(factor as u128 + 1);
    let cap = 50 * (log2n(n) as u64).pow(2);
    let mut runs = Runs::new(n, vals.universe(), seed, consts);
    runs.next();

    let mut split: Vec<Splitter> = (0..n)
        .map(|v| Splitter {
            tokens: vals.get(v).map(|value| Token { value, weight: factor, weight_bits }).into_iter().collect(),
        })
        .collect();
    stats.absorb(&runs.run(sampler, &mut split, cap, "duplication splitting rounds")?);

    let mut dist: Vec<Distributor> = split
        .into_iter()
        .map(|s| {
            let mut tokens: VecDeque<Token> = s.tokens.into();
            Distributor { settled: tokens.pop_front(), surplus: tokens }
        })
        .collect();
    stats.absorb(&runs.run(sampler, &mut dist, cap, "duplication distributing rounds")?);

    let out = dist.iter().map(|d| d.settled.as_ref().map(|t| t.value)).collect();
    Ok(Duplication { vals: ValueAssignment::new(out, vals.universe())?, z, factor, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::UniformPartners;
    use crate::rng::run_rng;
    use rand::Rng;

    #[test]
    fn twelve_nodes_three_values() {
        let mut vals = vec![None; 12];
        vals[2] = Some(1);
        vals[5] = Some(1);
        vals[9] = Some(2);
        let vals = ValueAssignment::new(vals, 4).unwrap();
        let mut u = UniformPartners::new(12, 1);
        let d = preprocess_duplicate(&mut u, &vals, 1, &Constants::default()).unwrap();
        assert_eq!((d.z, d.factor), (3, 2));
        let f = d.vals.frequencies();
        assert_eq!((f.count(1), f.count(2), d.vals.non_empty()), (4, 2, 6));
    }

    #[test]
    fn dense_input_unchanged() {
        let vals = ValueAssignment::new((0..30).map(|v| (v % 2 == 0).then_some(3)).collect(), 4).unwrap();
        let mut u = UniformPartners::new(30, 1);
        let d = preprocess_duplicate(&mut u, &vals, 1, &Constants::default()).unwrap();
        assert_eq!(d.factor, 1);
        assert_eq!(d.vals, vals);
    }

    #[test]
    fn ratios_preserved_on_sparse_instances() {
        let c = Constants::default();
        for seed in 0..15u64 {
            let mut rng = run_rng(seed, &[]);
            let n = rng.gen_range(60..200);
            let z = rng.gen_range(1..n / 4);
            let mut vals = vec![None; n];
            for v in 0..z {
                vals[(v * 17 + seed as usize) % n] = Some(rng.gen_range(1..=6));
            }
            let vals = ValueAssignment::new(vals, 6).unwrap();
            let mut u = UniformPartners::new(n, seed);
            let d = preprocess_duplicate(&mut u, &vals, seed, &c).unwrap();
            let z = vals.non_empty() as u64;
            let expect = (n as u64).div_ceil(3 * z);
            assert_eq!(d.factor, expect);
            assert_eq!(d.vals.non_empty() as u64, z * expect);
            for (x, f) in vals.frequencies().iter() {
                assert_eq!(d.vals.frequencies().count(x), f * expect);
            }
            assert!(d.stats.rounds <= 50 * (log2n(n) as u64).pow(2));
        }
    }
}
