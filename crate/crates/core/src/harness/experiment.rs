use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Baseline, ConfigError, ExperimentConfig};
use super::envs::EnvError;
use super::runlog::{write_run, RunLogError};
use super::summary::{summarize, SummaryError, SweepSummary};
use crate::agent::{self, AgentError, Environment, EpisodeRecord, GapHistogram, RunLog, RunSummary};
use crate::mdp::{exact_q_star, gap_min, uniform_policy_value};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("K={episodes}, seed={seed}: {source}")]
    Agent {
        episodes: usize,
        seed: u64,
        source: AgentError,
    },
    #[error(transparent)]
    RunLog(#[from] RunLogError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Agent,
    AlwaysSwitch,
    UniformRandom,
}

impl From<Baseline> for Variant {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::AlwaysSwitch => Variant::AlwaysSwitch,
            Baseline::UniformRandom => Variant::UniformRandom,
        }
    }
}

/// One `(K, seed, variant)` cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub episodes: usize,
    pub seed: u64,
    pub variant: Variant,
}

pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut variants = vec![Variant::Agent];
    for b in &config.baselines {
        let v = Variant::from(*b);
        if !variants.contains(&v) {
            variants.push(v);
        }
    }
    let mut out = Vec::new();
    for &episodes in &config.k_grid {
        for seed in config.seeds.expand() {
            for &variant in &variants {
                out.push(Cell {
                    episodes,
                    seed,
                    variant,
                });
            }
        }
    }
    out
}

/// Exact regret of the uniformly random policy, `K·(V* − V^unif)`.
pub fn uniform_random_baseline(env: &Environment, episodes: usize, seed: u64) -> RunLog {
    let mdp = env.mdp();
    let s0 = mdp.initial_state();
    let inst = (exact_q_star(mdp).v(0, s0) - uniform_policy_value(mdp).v(0, s0)).max(0.0);
    let records: Vec<EpisodeRecord> = (1..=episodes)
        .map(|k| EpisodeRecord {
            episode: k,
            inst_regret: inst,
            cum_regret: inst * k as f64,
            switch_ds: false,
            switch_pi: false,
            zhat_mass: 0,
            replan_ms: 0.0,
        })
        .collect();
    let g = gap_min(mdp);
    RunLog {
        config_hash: String::new(),
        seed,
        summary: RunSummary {
            variant: "uniform_random".into(),
            episodes,
            horizon: mdp.horizon(),
            n_switch_ds: 0,
            n_switch_pi: 0,
            final_regret: records.last().map_or(0.0, |r| r.cum_regret),
            gap_min: g.is_finite().then_some(g),
            beta: 0.0,
            log_net: 0.0,
            optimism_fraction: 0.0,
            visited_violations: 0,
            bonus_sum: 0.0,
            probability_sum: 0.0,
            gap_histogram: GapHistogram::new(g, mdp.horizon()),
            theta_hat: None,
            theta_hat_pooled: None,
            theta_star: None,
        },
        records,
        datasets: Vec::new(),
    }
}

pub fn run_cell(
    config: &ExperimentConfig,
    env: &Environment,
    cell: Cell,
    hash: &str,
) -> Result<RunLog, ExperimentError> {
    let mut log = match cell.variant {
        Variant::UniformRandom => uniform_random_baseline(env, cell.episodes, cell.seed),
        Variant::Agent | Variant::AlwaysSwitch => {
            let mut agent_cfg = config.agent.clone();
            agent_cfg.episodes = cell.episodes;
            agent_cfg.seed = cell.seed;
            agent_cfg.always_switch |= cell.variant == Variant::AlwaysSwitch;
            agent::run(agent_cfg, env.clone()).map_err(|source| ExperimentError::Agent {
                episodes: cell.episodes,
                seed: cell.seed,
                source,
            })?
        }
    };
    log.config_hash = hash.to_string();
    Ok(log)
}

/// Runs every cell in parallel; results come back in cell order.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<Vec<RunLog>, ExperimentError> {
    config.validate()?;
    let env = config.env.build(base_dir)?;
    let hash = config.hash();
    cells(config)
        .into_par_iter()
        .map(|cell| run_cell(config, &env, cell, &hash))
        .collect()
}

/// Writes one CSV + sidecar per run and, with ≥ 2 episode counts, a
/// `summary.json`. Returns the summary when one was produced.
pub fn write_experiment(logs: &[RunLog], out_dir: &Path) -> Result<Option<SweepSummary>, ExperimentError> {
    for log in logs {
        write_run(out_dir, log)?;
    }
    match summarize(logs) {
        Ok(summary) => {
            let path: PathBuf = out_dir.join("summary.json");
            let text = serde_json::to_string_pretty(&summary).map_err(RunLogError::from)?;
            std::fs::write(&path, text).map_err(|source| RunLogError::Io { path, source })?;
            Ok(Some(summary))
        }
        Err(SummaryError::InsufficientData(_)) => Ok(None),
    }
}
