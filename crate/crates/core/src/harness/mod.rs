//! Configuration, environments, sweeps and result serialisation.

pub mod check;
pub mod config;
pub mod envs;
pub mod experiment;
pub mod runlog;
pub mod stats;
pub mod summary;

pub use config::{Baseline, ConfigError, ExperimentConfig, SeedSpec};
pub use envs::{chain, env_registry, mixture, random_gapped, random_mdp, riverswim, EnvError, EnvSpec};
pub use experiment::{run_experiment, uniform_random_baseline, write_experiment, Cell, ExperimentError, Variant};
pub use runlog::{read_run, write_run, CSV_HEADER};
pub use summary::{summarize, SummaryError, SweepSummary};
