//! Experiment configs, instance generation, trial orchestration and result files.

mod config;
mod instance;
mod output;
mod run;
mod sweep;

pub use config::{Algorithm, ExperimentConfig, Model, Seeds, ValueDistribution};
pub use instance::generate_values;
pub use output::{write_csv, write_jsonl, CSV_COLUMNS};
pub use run::{run_experiment, run_trial, TrialRecord, SCHEMA_VERSION};
pub use sweep::{run_sweep, SweepConfig};
