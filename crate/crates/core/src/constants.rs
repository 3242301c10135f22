//! Tunable constants hidden behind asymptotic notation, with environment
//! overrides for sensitivity studies.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// Message budget multiplier: B = c0 · ⌈log₂ max(n, N, 16)⌉ bits.
    pub c0: u32,
    /// Median amplification width multiplier (s = ⌈c_med · log₂ n⌉).
    pub c_med: f64,
    /// AMS repetition multiplier.
    pub c_ams: f64,
    /// Phase multiplier for the gossip F_k estimator.
    pub c_fk: f64,
    /// Estimator-count multiplier for the gossip F_p estimator.
    pub c_est: f64,
    /// Push-sum round multiplier.
    pub c_push: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c0: 8,
            c_med: 2.0,
            c_ams: 8.0,
            c_fk: 4.0,
            c_est: 8.0,
            c_push: 6.0,
        }
    }
}

impl Constants {
    /// Defaults overridden by `DISTSUM_C0`, `DISTSUM_C_MED`, `DISTSUM_C_AMS`,
    /// `DISTSUM_C_FK`, `DISTSUM_C_EST` and `DISTSUM_C_PUSH` when set.
    pub fn from_env() -> Self {
        let mut c = Self::default();
        c.apply_env(|k| std::env::var(k).ok());
        c
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get("DISTSUM_C0").and_then(|s| s.parse().ok()) {
            self.c0 = v;
        }
        let floats: [(&str, &mut f64); 5] = [
            ("DISTSUM_C_MED", &mut self.c_med),
            ("DISTSUM_C_AMS", &mut self.c_ams),
            ("DISTSUM_C_FK", &mut self.c_fk),
            ("DISTSUM_C_EST", &mut self.c_est),
            ("DISTSUM_C_PUSH", &mut self.c_push),
        ];
        for (key, slot) in floats {
            if let Some(v) = get(key).and_then(|s| s.parse().ok()) {
                *slot = v;
            }
        }
    }
}

/// ⌈log₂ x⌉ with log₂ 0 = log₂ 1 = 0.
pub fn ceil_log2(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// ⌈log₂ n⌉ clamped to at least 1, the usual "log n" in round budgets.
pub fn log2n(n: usize) -> u32 {
    ceil_log2(n as u128).max(1)
}

/// Rounds an odd-required count up to the next odd number.
pub fn force_odd(x: usize) -> usize {
    if x % 2 == 0 {
        x + 1
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_apply() {
        let mut c = Constants::default();
        c.apply_env(|k| match k {
            "DISTSUM_C0" => Some("4".into()),
            "DISTSUM_C_AMS" => Some("0.5".into()),
            _ => None,
        });
        assert_eq!(c.c0, 4);
        assert_eq!(c.c_ams, 0.5);
        assert_eq!(c.c_med, 2.0);
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(0), 0);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
        assert_eq!(force_odd(20), 21);
        assert_eq!(force_odd(9), 9);
    }
}
