use super::config::{ExperimentConfig, ValueDistribution};
use crate::error::{invalid, Result};
use crate::rng::{run_rng, tag};
use crate::values::ValueAssignment;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Zipf};

/// Draws the value assignment for `n` nodes. Exactly round(null_fraction·n)
/// nodes, chosen uniformly, are NULL; the rest draw from the distribution.
/// File instances are taken as written.
pub fn generate_values(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<ValueAssignment> {
    let universe = cfg.universe;
    if let ValueDistribution::File { path } = &cfg.values {
        let text = std::fs::read_to_string(path)?;
        return ValueAssignment::parse_instance(&text, Some(n), Some(universe));
    }
    let mut rng = run_rng(cfg.instance_seed.unwrap_or(seed), &[tag::INSTANCE]);
    let nulls = (cfg.null_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let holders = &order[nulls.min(n)..];
    let drawn: Vec<u64> = match &cfg.values {
        ValueDistribution::AllDistinct => {
            if holders.len() as u64 > universe {
                return Err(invalid(format!("{} distinct values do not fit a universe of {universe}", holders.len())));
            }
            index::sample(&mut rng, universe as usize, holders.len()).into_iter().map(|i| i as u64 + 1).collect()
        }
        ValueDistribution::Single { value } => vec![*value; holders.len()],
        ValueDistribution::Zipf { alpha, support } => {
            let z = Zipf::new(*support, *alpha).map_err(|e| invalid(format!("zipf: {e}")))?;
            (0..holders.len()).map(|_| (z.sample(&mut rng) as u64).clamp(1, *support)).collect()
        }
        ValueDistribution::Uniform { support } => (0..holders.len()).map(|_| rng.gen_range(1..=*support)).collect(),
        ValueDistribution::File { .. } => unreachable!(),
    };
    let mut vals = vec![None; n];
    for (&v, x) in holders.iter().zip(drawn) {
        vals[v] = Some(x);
    }
    ValueAssignment::new(vals, universe)
}
