//! Exact Σ g(f_i) by sorting on a comparator network, head/tail frequency
//! recovery and tree aggregation; top-k frequent values on the same pipeline.

mod gsum;
mod network;
mod sort;

pub use gsum::{aggregate_wide, exact_g_sum, g_oracle, head_phase, top_k, ExactSum, GFunction, GValue, HeadPhase, TopK};
pub use network::{build_sorting_network, SortingNetwork};
pub use sort::{distributed_sort, Key};
