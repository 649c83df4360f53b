//! Benchmark harness for the sparse phase retrieval solver: declarative JSON
//! configs in, deterministic CSV/JSON artifacts out.
//!
//! The library surface mirrors the `grahtp` binary so experiments can also be
//! driven in-process (the test suite does exactly that): build an
//! [`ExperimentConfig`], call [`run_experiment`], and write or inspect the
//! returned tables. Everything in `results.csv` is a pure function of the
//! config — including all randomness, which flows through per-trial seed
//! streams derived from `seed_base` (see [`trial_seeds`]).

pub mod config;
pub mod error;
pub mod jobs;
pub mod runner;
pub mod synth;
pub mod table;

pub use config::{ExperimentConfig, Family, GenConfig, InitSpec, RangeSpec, SolveJobConfig};
pub use error::{CliError, CliResult};
pub use jobs::{generate_instance, load_instance, run_solve_job, write_instance, InstanceFile};
pub use runner::{run_experiment, trial_seeds, TrialSeeds};
pub use table::ExperimentOutput;
