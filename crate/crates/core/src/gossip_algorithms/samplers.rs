use super::Runs;
use crate::constants::{log2n, Constants};
use crate::engines::{bits_for, BitCost, Delivery, GossipAction, GossipCtx, GossipProgram, PartnerSampler, Payload, RoundStats};
use crate::error::{invalid, Error, Result};
use crate::primitives::{cube_modulus, HashFunction, HashKind};
use crate::rng::{run_rng, tag};
use crate::values::ValueAssignment;

/// Push rounds allowed for rumor spreading and min-diffusion, 4·⌈log₂ n⌉.
pub fn diffusion_budget(n: usize) -> u64 {
    4 * log2n(n) as u64
}

/// Something diffused by repeated pushes; the smallest one wins.
trait Rumor: Ord + Clone {
    fn width(&self, c: &BitCost) -> u32;
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Msg<T>(T);

impl<T: Rumor> Payload for Msg<T> {
    fn bits(&self, c: &BitCost) -> u32 {
        self.0.width(c)
    }
}

struct Diffuse<T> {
    best: Option<T>,
    budget: u64,
}

impl<T: Rumor> GossipProgram for Diffuse<T> {
    type Msg = Msg<T>;
    fn step(&mut self, ctx: &mut GossipCtx<'_, Msg<T>>) -> GossipAction<Msg<T>> {
        for d in ctx.take_inbox() {
            if let Delivery::Pushed { msg, .. } = d {
                if self.best.as_ref().is_none_or(|b| msg.0 < *b) {
                    self.best = Some(msg.0);
                }
            }
        }
        if ctx.round() > self.budget {
            return GossipAction::halt();
        }
        match &self.best {
            Some(b) => GossipAction::push(Msg(b.clone())),
            None => GossipAction::idle(),
        }
    }
}

fn diffuse<T: Rumor, S: PartnerSampler + ?Sized>(sampler: &mut S, runs: &mut Runs, start: Vec<Option<T>>) -> Result<(Vec<Option<T>>, RoundStats)> {
    let budget = diffusion_budget(start.len());
    let mut nodes: Vec<Diffuse<T>> = start.into_iter().map(|best| Diffuse { best, budget }).collect();
    let stats = runs.run(sampler, &mut nodes, budget + 1, "diffusion rounds")?;
    Ok((nodes.into_iter().map(|d| d.best).collect(), stats))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Coeffs {
    words: Vec<u64>,
    word_bits: u32,
}

impl Rumor for Coeffs {
    fn width(&self, _: &BitCost) -> u32 {
        self.words.len() as u32 * self.word_bits
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Keyed {
    key: u64,
    value: u64,
    key_bits: u32,
}

impl Rumor for Keyed {
    fn width(&self, c: &BitCost) -> u32 {
        self.key_bits + c.value()
    }
}

/// Uniform sample from the support: the node with the smallest identifier
/// draws a pairwise hash and spreads its coefficients, then the value with
/// the smallest hash is found by min-diffusion. Returns the first node's view.
pub fn l0_sample<S>(sampler: &mut S, vals: &ValueAssignment, seed: u64, consts: &Constants) -> Result<(u64, RoundStats)>
where
    S: PartnerSampler + ?Sized,
{
    let n = vals.n();
    if vals.non_empty() == 0 {
        return Err(Error::EmptyInput("l0 sampling needs a non-empty node"));
    }
    let modulus = cube_modulus(vals.universe());
    let word_bits = bits_for(modulus as u128);
    let h = HashFunction::draw(HashKind::Pairwise, modulus, &mut run_rng(seed, &[tag::LEADER]));
    let mut runs = Runs::new(n, vals.universe(), seed, consts);
    let mut start = vec![None; n];
    start[0] = Some(Coeffs { words: h.coeffs.clone(), word_bits });
    let (known, mut stats) = diffuse(sampler, &mut runs, start)?;

    let keyed: Vec<Option<Keyed>> = (0..n)
        .map(|v| {
            let coeffs = known[v].as_ref()?;
            let h = HashFunction { kind: HashKind::Pairwise, modulus, coeffs: coeffs.words.clone() };
            vals.get(v).map(|x| Keyed { key: h.eval(x), value: x, key_bits: word_bits })
        })
        .collect();
    let (best, s) = diffuse(sampler, &mut runs, keyed)?;
    stats.absorb(&s);
    let winner = best[0].as_ref().ok_or(Error::Disagreement("min-diffusion did not reach the first node"))?;
    Ok((winner.value, stats))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    node: usize,
    value: u64,
}

impl Rumor for Candidate {
    fn width(&self, c: &BitCost) -> u32 {
        c.node_id() + c.value()
    }
}

#[derive(Clone, Debug)]
struct Value(u64);

impl Payload for Value {
    fn bits(&self, c: &BitCost) -> u32 {
        c.value()
    }
}

/// Either side of the ℓp attempt: p pulls, then min-diffusion of successes.
#[derive(Clone, Debug)]
enum AttemptMsg {
    Value(Value),
    Candidate(Msg<Candidate>),
}

impl Payload for AttemptMsg {
    fn bits(&self, c: &BitCost) -> u32 {
        match self {
            AttemptMsg::Value(v) => v.bits(c),
            AttemptMsg::Candidate(m) => m.bits(c),
        }
    }
}

struct Attempt {
    own: Option<u64>,
    p: u64,
    budget: u64,
    seen: Vec<u64>,
    best: Option<Candidate>,
}

impl GossipProgram for Attempt {
    type Msg = AttemptMsg;
    fn step(&mut self, ctx: &mut GossipCtx<'_, AttemptMsg>) -> GossipAction<AttemptMsg> {
        let round = ctx.round();
        for d in ctx.take_inbox() {
            match d {
                Delivery::Pulled { msg: AttemptMsg::Value(Value(x)), .. } => self.seen.push(x),
                Delivery::Pushed { msg: AttemptMsg::Candidate(Msg(c)), .. } => {
                    if self.best.as_ref().is_none_or(|b| c < *b) {
                        self.best = Some(c);
                    }
                }
                _ => {}
            }
        }
        let respond = self.own.map(|x| AttemptMsg::Value(Value(x)));
        if round <= self.p {
            return GossipAction::pull().responding(respond);
        }
        if round == self.p + 1 && self.seen.len() as u64 == self.p && self.seen.windows(2).all(|w| w[0] == w[1]) {
            let mine = Candidate { node: ctx.node(), value: self.seen[0] };
            if self.best.as_ref().is_none_or(|b| mine < *b) {
                self.best = Some(mine);
            }
        }
        if round > self.p + self.budget {
            return GossipAction::halt().responding(respond);
        }
        match &self.best {
            Some(b) => GossipAction::push(AttemptMsg::Candidate(Msg(b.clone()))).responding(respond),
            None => GossipAction::idle().responding(respond),
        }
    }
}

/// An ℓp sample and how many attempts it took.
#[derive(Clone, Debug)]
pub struct LpSample {
    pub value: u64,
    pub attempts: u64,
    pub stats: RoundStats,
}

/// Samples value i with probability f_i^p / F_p. In each attempt every node
/// pulls from p partners and succeeds if all p values are equal and
/// non-NULL; the success with the smallest identifier is diffused. Attempts
/// repeat until the first node learns a success.
pub fn lp_sample<S>(sampler: &mut S, vals: &ValueAssignment, p: u32, seed: u64, consts: &Constants) -> Result<LpSample>
where
    S: PartnerSampler + ?Sized,
{
    if p == 0 {
        return Err(invalid("lp sampling needs p >= 1"));
    }
    if vals.non_empty() == 0 {
        return Err(Error::EmptyInput("lp sampling needs a non-empty node"));
    }
    let n = vals.n();
    let budget = diffusion_budget(n);
    let cap = 50 * log2n(n) as u64;
    let mut runs = Runs::new(n, vals.universe(), seed, consts);
    let mut stats = RoundStats::default();
    for attempt in 1..=cap {
        let mut nodes: Vec<Attempt> = (0..n)
            .map(|v| Attempt { own: vals.get(v), p: p as u64, budget, seen: Vec::with_capacity(p as usize), best: None })
            .collect();
        stats.absorb(&runs.run(sampler, &mut nodes, p as u64 + budget + 1, "lp attempt rounds")?);
        if let Some(c) = &nodes[0].best {
            return Ok(LpSample { value: c.value, attempts: attempt, stats });
        }
    }
    Err(Error::CapExceeded { what: "lp sampling attempts", cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::UniformPartners;
    use std::collections::BTreeMap;

    fn assignment(vals: Vec<Option<u64>>, universe: u64) -> ValueAssignment {
        ValueAssignment::new(vals, universe).unwrap()
    }

    #[test]
    fn single_value_always_sampled() {
        let vals = assignment((0..20).map(|v| (v % 3 == 0).then_some(5)).collect(), 8);
        let mut u = UniformPartners::new(20, 1);
        for seed in 0..5 {
            assert_eq!(l0_sample(&mut u, &vals, seed, &Constants::default()).unwrap().0, 5);
            assert_eq!(lp_sample(&mut u, &vals, 2, seed, &Constants::default()).unwrap().value, 5);
        }
    }

    #[test]
    fn l0_is_uniform_over_support() {
        let mut vals = vec![Some(1); 9];
        vals.push(Some(2));
        let vals = assignment(vals, 4);
        let mut u = UniformPartners::new(10, 3);
        let trials = 4000;
        let twos = (0..trials).filter(|&s| l0_sample(&mut u, &vals, s, &Constants::default()).unwrap().0 == 2).count();
        assert!((twos as f64 / trials as f64 - 0.5).abs() < 0.03, "{twos}");
    }

    #[test]
    fn lp_matches_power_distribution() {
        let vals = assignment(vec![Some(1), Some(1), Some(2)], 2);
        let mut u = UniformPartners::new(3, 4);
        let trials = 20_000;
        let mut counts = BTreeMap::new();
        for s in 0..trials {
            *counts.entry(lp_sample(&mut u, &vals, 2, s, &Constants::default()).unwrap().value).or_insert(0u64) += 1;
        }
        let ones = counts[&1] as f64 / trials as f64;
        assert!((ones - 0.8).abs() < 0.02, "{ones}");
    }

    #[test]
    fn empty_input_rejected() {
        let vals = assignment(vec![None; 4], 2);
        let mut u = UniformPartners::new(4, 4);
        assert!(l0_sample(&mut u, &vals, 0, &Constants::default()).is_err());
        assert!(lp_sample(&mut u, &vals, 2, 0, &Constants::default()).is_err());
    }
}
