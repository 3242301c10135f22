use serde::{Deserialize, Serialize};

/// Accounting for one engine run, or a sequential composition of runs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    /// Communication rounds: the last round in which anything was sent.
    pub rounds: u64,
    /// Rounds in which at least one node was invoked.
    pub executed_rounds: u64,
    pub messages_sent: u64,
    /// Largest queue observed on one edge direction (1 when unqueued traffic flowed).
    pub max_edge_congestion: u64,
    pub per_round_message_counts: Vec<u64>,
    pub hit_round_cap: bool,
    /// CONGEST rounds charged for emulated gossip partners or cost-model routing.
    pub charged_rounds: u64,
}

impl RoundStats {
    /// Appends `other` as if it ran after `self`.
    pub fn absorb(&mut self, other: &RoundStats) {
        self.per_round_message_counts
            .resize(self.rounds as usize, 0);
        self.per_round_message_counts
            .extend_from_slice(&other.per_round_message_counts[..(other.rounds as usize).min(other.per_round_message_counts.len())]);
        self.rounds += other.rounds;
        self.executed_rounds += other.executed_rounds;
        self.messages_sent += other.messages_sent;
        self.max_edge_congestion = self.max_edge_congestion.max(other.max_edge_congestion);
        self.hit_round_cap |= other.hit_round_cap;
        self.charged_rounds += other.charged_rounds;
    }

    /// Adds rounds that were charged without simulation.
    pub fn charge(&mut self, rounds: u64) {
        self.charged_rounds += rounds;
    }

    /// Communication rounds plus charged rounds.
    pub fn total_rounds(&self) -> u64 {
        self.rounds + self.charged_rounds
    }

    pub fn ensure_complete(&self, what: &'static str, cap: u64) -> crate::Result<()> {
        if self.hit_round_cap {
            Err(crate::Error::CapExceeded { what, cap })
        } else {
            Ok(())
        }
    }
}
