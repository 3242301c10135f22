//! Round-synchronous CONGEST and GOSSIP simulation with distributed
//! data-summarization algorithms: frequency moments, distinct counts,
//! exact aggregates via sorting networks, top-k, and gossip emulation
//! over random walks.

pub mod congest_sketches;
pub mod constants;
pub mod engines;
pub mod error;
pub mod exact_sum;
pub mod gossip_algorithms;
pub mod gossip_emulation;
pub mod graph;
pub mod harness;
pub mod oracles;
pub mod primitives;
pub mod rng;
pub mod values;

pub use error::{Error, Result};
