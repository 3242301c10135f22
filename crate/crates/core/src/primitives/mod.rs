//! CONGEST building blocks: leader election with DFS identifiers, tree
//! aggregation and broadcast, pipelined grouped upcast, hash families and
//! message routing.

mod aggregate;
mod broadcast;
mod election;
mod hash;
mod router;
mod upcast;

pub use aggregate::{aggregate_sum, aggregate_vector, convergecast, Convergecast};
pub use broadcast::{broadcast_items, broadcast_words, gather_to_root, Word};
pub use election::{elect_leader_and_ids, LeaderSetup};
pub use hash::{cube_modulus, is_prime, smallest_prime_at_least, HashFunction, HashKind};
pub use router::{route, Routed, Router};
pub use upcast::{upcast_k_smallest_grouped, GroupedUpcast};
