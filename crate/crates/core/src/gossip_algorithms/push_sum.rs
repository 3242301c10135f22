use super::Runs;
use crate::constants::{ceil_log2, log2n, Constants};
use crate::engines::{BitCost, Delivery, GossipAction, GossipCtx, GossipProgram, PartnerSampler, Payload, RoundStats};
use crate::error::{invalid, Result};

const SCALE: u128 = 1 << 64;

#[derive(Clone, Debug)]
struct Mass {
    s: u128,
    w: u128,
    field_bits: u32,
}

impl Payload for Mass {
    fn bits(&self, _: &BitCost) -> u32 {
        2 * self.field_bits
    }
}

struct PushSumNode {
    s: u128,
    w: u128,
    rounds: u64,
    field_bits: u32,
}

impl GossipProgram for PushSumNode {
    type Msg = Mass;
    fn step(&mut self, ctx: &mut GossipCtx<'_, Mass>) -> GossipAction<Mass> {
        for d in ctx.take_inbox() {
            if let Delivery::Pushed { msg, .. } = d {
                self.s += msg.s;
                self.w += msg.w;
            }
        }
        if ctx.round() > self.rounds {
            return GossipAction::halt();
        }
        let (hs, hw) = (self.s / 2, self.w / 2);
        self.s -= hs;
        self.w -= hw;
        GossipAction::push(Mass { s: hs, w: hw, field_bits: self.field_bits })
    }
}

/// Result of push-sum: every node's estimate n·s/w of the input total.
#[derive(Clone, Debug)]
pub struct PushSum {
    pub estimates: Vec<f64>,
    pub rounds: u64,
    /// Σ s over nodes at the end, in units of 2⁻⁶⁴.
    pub mass: u128,
    pub stats: RoundStats,
}

impl PushSum {
    pub fn rounded(&self, v: usize) -> u64 {
        self.estimates[v].round().max(0.0) as u64
    }
}

/// ⌈c_push·log₂ n + log₂(1/δ)⌉ with δ = 1/(8·n·max_sum).
pub fn push_sum_rounds(n: usize, max_sum: u64, consts: &Constants) -> u64 {
    let inv_delta = 8.0 * n as f64 * max_sum.max(1) as f64;
    (consts.c_push * log2n(n) as f64 + inv_delta.log2()).ceil() as u64
}

/// Push-sum for `rounds` rounds: each node keeps ⌈s/2⌉, ⌈w/2⌉ and pushes the
/// rest to its partner. Masses are exact integers, so Σ s never changes.
/// Messages are costed at ⌈log₂(1/δ)⌉ bits per field.
pub fn push_sum<S>(sampler: &mut S, inputs: &[u64], max_sum: u64, rounds: u64, seed: u64, consts: &Constants) -> Result<PushSum>
where
    S: PartnerSampler + ?Sized,
{
    let n = inputs.len();
    if rounds == 0 || n == 0 {
        return Err(invalid("push-sum needs rounds >= 1 and at least one node"));
    }
    if inputs.iter().map(|&x| x as u128).sum::<u128>() > max_sum as u128 {
        return Err(invalid("push-sum inputs exceed the declared maximum sum"));
    }
    let field_bits = ceil_log2(8 * n as u128 * max_sum.max(1) as u128);
    let mut nodes: Vec<PushSumNode> = inputs.iter().map(|&x| PushSumNode { s: x as u128 * SCALE, w: SCALE, rounds, field_bits }).collect();
    let mut runs = Runs::new(n, max_sum.max(2), seed, consts);
    let stats = runs.run(sampler, &mut nodes, rounds + 1, "push-sum rounds")?;
    let estimates = nodes.iter().map(|p| n as f64 * p.s as f64 / p.w as f64).collect();
    let mass = nodes.iter().map(|p| p.s).sum();
    Ok(PushSum { estimates, rounds, mass, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::UniformPartners;

    #[test]
    fn uniform_inputs_stay_exact() {
        let mut u = UniformPartners::new(20, 1);
        let r = push_sum(&mut u, &[3; 20], 60, 12, 1, &Constants::default()).unwrap();
        assert!(r.estimates.iter().all(|&e| (e - 60.0).abs() < 1e-9));
        assert_eq!(r.mass, 60 * SCALE);
    }

    #[test]
    fn mass_conserved_over_fifty_rounds() {
        let inputs: Vec<u64> = (0..37).map(|v| v % 5).collect();
        let mut u = UniformPartners::new(37, 2);
        let r = push_sum(&mut u, &inputs, 200, 50, 2, &Constants::default()).unwrap();
        assert_eq!(r.mass, inputs.iter().sum::<u64>() as u128 * SCALE);
        assert_eq!(r.stats.rounds, 50);
    }

    #[test]
    fn indicator_count_recovered_exactly() {
        let n = 256;
        let inputs: Vec<u64> = (0..n).map(|v| u64::from(v * 7 % n < 57)).collect();
        assert_eq!(inputs.iter().sum::<u64>(), 57);
        let c = Constants::default();
        let rounds = push_sum_rounds(n, n as u64, &c);
        let ok = (0..30)
            .filter(|&seed| {
                let mut u = UniformPartners::new(n, seed);
                let r = push_sum(&mut u, &inputs, n as u64, rounds, seed, &c).unwrap();
                (0..n).all(|v| r.rounded(v) == 57)
            })
            .count();
        assert_eq!(ok, 30);
    }
}
