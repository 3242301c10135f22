//! GOSSIP(λ) emulated in CONGEST: destination tokens are spread over the
//! edge compartments by random walks once, then every emulated round each
//! node's source walk picks a partner and messages replay the recorded walks.

mod round;
mod setup;
mod walks;

pub use round::{emulate_round, message_path, source_walks, EmulatedPartners, EmulatedRound, EmulationMode, SourceWalks};
pub use setup::{emulate_setup, trial_cap, Compartment, DestToken, EmulationState};
pub use walks::{edge_offsets, parallel_random_walks, replay_paths, WalkOutcome};
