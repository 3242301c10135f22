//! CONGEST approximation sketches: distinct count by t-th smallest hash,
//! F2 by tug-of-war sign sums, and F_p by AMS sampling, each amplified by
//! a median over repetitions pipelined on the BFS tree.

mod ams;
mod f0;
mod f2;

pub use crate::values::{FrequencyVector, ValueAssignment};
pub use ams::{ams_repetitions, ams_single_estimate, fp_ams_estimate, AmsParams};
pub use f0::{f0_estimate, kmv_repetition_estimate, KmvParams};
pub use f2::{f2_estimate, tug_of_war_modulus, tug_of_war_single, TugOfWarParams};

use crate::engines::RoundStats;
use serde::{Deserialize, Serialize};

/// An estimator output, optionally paired with the oracle truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub truth: Option<f64>,
    pub rounds: u64,
}

impl Estimate {
    pub fn rel_error(&self) -> Option<f64> {
        self.truth.map(|t| if t == 0.0 { self.value.abs() } else { (self.value - t).abs() / t })
    }
}

/// Result of a distributed sketch run.
#[derive(Clone, Debug)]
pub struct SketchOutcome {
    pub estimate: f64,
    /// The per-group values the median was taken over.
    pub repetitions: Vec<f64>,
    pub stats: RoundStats,
}

/// Median of an odd-length or even-length list (lower middle for even).
pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs[(xs.len() - 1) / 2]
}

/// Fixed-point word for broadcasting a final real-valued estimate.
pub(crate) fn estimate_word(x: f64) -> u64 {
    (x.max(0.0) * 16.0).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_rel_error() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.0);
        let e = Estimate { value: 90.0, truth: Some(100.0), rounds: 3 };
        assert!((e.rel_error().unwrap() - 0.1).abs() < 1e-12);
    }
}
