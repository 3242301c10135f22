//! Round-synchronous execution: a CONGEST engine (one budgeted message per
//! edge direction per round) and a GOSSIP engine (one partner per node per
//! round, PUSH or PULL).

mod congest;
mod gossip;
mod payload;
mod stats;

pub use congest::{run_congest, CongestConfig, CongestProgram, Control, Ctx};
pub use gossip::{
    run_gossip, Delivery, GossipAction, GossipConfig, GossipCtx, GossipOp, GossipProgram, PartnerSampler,
    UniformPartners,
};
pub use payload::{bits_for, BitCost, Payload};
pub use stats::RoundStats;
