//! Seeded experiments, their tables and the command-line front end.
//!
//! Every experiment is a function of a [`ScenarioConfig`] alone. Random
//! numbers come from per-item streams keyed by the config seed, so the
//! output does not depend on the number of worker threads.

pub mod ann;
pub mod cli;
pub mod common;
pub mod config;
pub mod engine;
pub mod mobility;
pub mod multi;
pub mod single;
pub mod table;

pub use cli::cli;
pub use common::RunOutput;
pub use config::{Experiment, IciMode, NoiseConfig, ScenarioConfig};
pub use engine::{env_threads, with_workers};
pub use table::{Cell, ResultTable};

use crate::error::Result;

/// Runs the experiment named in `cfg` on the current thread pool.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::SnrMap => single::snr_map(cfg),
        Experiment::Pdf => single::pdf(cfg),
        Experiment::RateVsCell => single::rate_vs_cell(cfg),
        Experiment::RateVsArray => single::rate_vs_array(cfg),
        Experiment::Multiuser => multi::multiuser(cfg),
        Experiment::Mobility => mobility::mobility(cfg),
        Experiment::Eyesafety => single::eyesafety(cfg),
        Experiment::TrainAnn => ann::train_ann(cfg),
    }
}

/// Runs on a pool of `threads` workers; `None` falls back to
/// `OWC_SIM_THREADS` and then to rayon's default.
pub fn run_with_workers(cfg: &ScenarioConfig, threads: Option<usize>) -> Result<RunOutput> {
    with_workers(threads.or_else(env_threads), || run(cfg))?
}
