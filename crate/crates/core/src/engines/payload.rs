use crate::constants::ceil_log2;

/// Bits needed to name one of `count` alternatives (at least 1).
pub fn bits_for(count: u128) -> u32 {
    ceil_log2(count).max(1)
}

/// Field costing and the per-message budget B = c0 · ⌈log₂ max(n, N, 16)⌉.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitCost {
    pub n: usize,
    pub universe: u64,
    pub c0: u32,
}

impl BitCost {
    pub fn new(n: usize, universe: u64, c0: u32) -> Self {
        Self { n, universe, c0 }
    }

    /// One machine word: ⌈log₂ max(n, N, 16)⌉.
    pub fn word(&self) -> u32 {
        ceil_log2((self.n as u128).max(self.universe as u128).max(16))
    }

    pub fn budget(&self) -> u32 {
        self.c0 * self.word()
    }

    /// A node identifier in 1..=n.
    pub fn node_id(&self) -> u32 {
        bits_for(self.n as u128)
    }

    /// A value in 1..=N or NULL.
    pub fn value(&self) -> u32 {
        bits_for(self.universe as u128 + 1)
    }
}

/// A message body whose semantic size is known.
pub trait Payload {
    fn bits(&self, cost: &BitCost) -> u32;
}

impl Payload for () {
    fn bits(&self, _: &BitCost) -> u32 {
        1
    }
}
