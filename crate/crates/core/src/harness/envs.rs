//! Named environment constructors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::Environment;
use crate::mdp::{gap_min, EpisodicMdp, LinearMixtureMdp, MdpError, MdpFile, MixtureFile};
use crate::seed::seeded_rng;

/// Rejection-sampling attempts before `random_gapped` gives up.
pub const MAX_GAPPED_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid parameter `{name}`: {message}")]
    Param { name: &'static str, message: String },
    #[error("no MDP with gap_min ≥ {target} found in {attempts} attempts")]
    Rejection { target: f64, attempts: usize },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

fn param(name: &'static str, message: impl Into<String>) -> EnvError {
    EnvError::Param {
        name,
        message: message.into(),
    }
}

/// Environment description as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Chain {
        n: usize,
        horizon: usize,
        gap: f64,
    },
    Riverswim {
        n: usize,
        horizon: usize,
    },
    RandomGapped {
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        gap_min: f64,
        seed: u64,
    },
    Mixture {
        d: usize,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        seed: u64,
    },
    /// JSON MDP file; relative paths resolve against the config directory.
    File {
        path: PathBuf,
        #[serde(default)]
        mixture: bool,
    },
    Inline {
        mdp: MdpFile,
    },
    InlineMixture {
        mdp: MixtureFile,
    },
}

impl EnvSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Environment, EnvError> {
        let tab = |m: EpisodicMdp| Environment::Tabular(Arc::new(m));
        Ok(match self {
            EnvSpec::Chain { n, horizon, gap } => tab(chain(*n, *horizon, *gap)?),
            EnvSpec::Riverswim { n, horizon } => tab(riverswim(*n, *horizon)?),
            EnvSpec::RandomGapped {
                n_states,
                n_actions,
                horizon,
                gap_min,
                seed,
            } => tab(random_gapped(*n_states, *n_actions, *horizon, *gap_min, *seed)?),
            EnvSpec::Mixture {
                d,
                n_states,
                n_actions,
                horizon,
                seed,
            } => Environment::Mixture(Arc::new(mixture(*d, *n_states, *n_actions, *horizon, *seed)?)),
            EnvSpec::File { path, mixture } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full).map_err(|source| EnvError::File {
                    path: full.clone(),
                    source,
                })?;
                if *mixture {
                    Environment::Mixture(Arc::new(MixtureFile::from_json(&text)?.into_mixture()?))
                } else {
                    tab(MdpFile::from_json(&text)?.into_mdp()?)
                }
            }
            EnvSpec::Inline { mdp } => tab(mdp.clone().into_mdp()?),
            EnvSpec::InlineMixture { mdp } => Environment::Mixture(Arc::new(mdp.clone().into_mixture()?)),
        })
    }
}

/// Registry entry for listing.
#[derive(Debug, Clone, Copy)]
pub struct EnvEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub fn env_registry() -> Vec<EnvEntry> {
    vec![
        EnvEntry {
            name: "chain",
            params: "n, horizon, gap",
            description: "deterministic chain; advancing reaches the rewarding end, staying pays 1 - gap",
        },
        EnvEntry {
            name: "riverswim",
            params: "n, horizon",
            description: "stochastic river with a small reward on the left bank and a large one upstream",
        },
        EnvEntry {
            name: "random_gapped",
            params: "n_states, n_actions, horizon, gap_min, seed",
            description: "random MDP rejection-sampled until every positive gap reaches gap_min",
        },
        EnvEntry {
            name: "mixture",
            params: "d, n_states, n_actions, horizon, seed",
            description: "random linear mixture MDP over d deterministic base kernels",
        },
        EnvEntry {
            name: "file",
            params: "path, mixture?",
            description: "MDP or linear mixture loaded from JSON",
        },
        EnvEntry {
            name: "inline",
            params: "mdp",
            description: "MDP given inline in the config",
        },
        EnvEntry {
            name: "inline_mixture",
            params: "mdp",
            description: "linear mixture given inline in the config",
        },
    ]
}

/// Deterministic chain on `n ≥ 2` states with actions `0 = stay`, `1 = advance`.
///
/// Advancing from `s ≥ n − 2` pays 1. Staying pays `1 − gap` while the
/// rewarding end is still reachable in the remaining steps, 0 otherwise.
/// Every positive gap equals `gap`.
pub fn chain(n: usize, horizon: usize, gap: f64) -> Result<EpisodicMdp, EnvError> {
    if n < 2 {
        return Err(param("n", format!("need at least 2 states, got {n}")));
    }
    if horizon == 0 {
        return Err(param("horizon", "must be at least 1"));
    }
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(param("gap", format!("must lie in (0, 1], got {gap}")));
    }
    let mut rewards = Vec::with_capacity(horizon * n * 2);
    let mut transitions = Vec::with_capacity(horizon * n * 2 * n);
    for h in 0..horizon {
        for s in 0..n {
            let distance = (n - 2).saturating_sub(s);
            let reachable = horizon - h > distance;
            rewards.push(if reachable { 1.0 - gap } else { 0.0 });
            rewards.push(if s + 2 >= n { 1.0 } else { 0.0 });
            for target in [s, (s + 1).min(n - 1)] {
                let mut row = vec![0.0; n];
                row[target] = 1.0;
                transitions.extend(row);
            }
        }
    }
    Ok(EpisodicMdp::new(n, 2, horizon, 0, rewards, transitions)?)
}

/// RiverSwim with actions `0 = left`, `1 = right`.
pub fn riverswim(n: usize, horizon: usize) -> Result<EpisodicMdp, EnvError> {
    if n < 2 {
        return Err(param("n", format!("need at least 2 states, got {n}")));
    }
    if horizon == 0 {
        return Err(param("horizon", "must be at least 1"));
    }
    let mut rewards = Vec::with_capacity(horizon * n * 2);
    let mut transitions = Vec::with_capacity(horizon * n * 2 * n);
    for _ in 0..horizon {
        for s in 0..n {
            rewards.push(if s == 0 { 0.005 } else { 0.0 });
            rewards.push(if s == n - 1 { 1.0 } else { 0.0 });
            let mut left = vec![0.0; n];
            left[s.saturating_sub(1)] = 1.0;
            let mut right = vec![0.0; n];
            right[(s + 1).min(n - 1)] += 0.35;
            right[s] += 0.6;
            right[s.saturating_sub(1)] += 0.05;
            transitions.extend(left);
            transitions.extend(right);
        }
    }
    Ok(EpisodicMdp::new(n, 2, horizon, 0, rewards, transitions)?)
}

fn simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Uniform rewards and flat-Dirichlet transition rows.
pub fn random_mdp<R: Rng + ?Sized>(n_states: usize, n_actions: usize, horizon: usize, rng: &mut R) -> EpisodicMdp {
    let cells = horizon * n_states * n_actions;
    let rewards = (0..cells).map(|_| rng.gen::<f64>()).collect();
    let mut transitions = Vec::with_capacity(cells * n_states);
    for _ in 0..cells {
        let mut row = simplex(n_states, rng);
        // Renormalise through the last entry so the row sums to 1 exactly enough.
        let head: f64 = row[..n_states - 1].iter().sum();
        row[n_states - 1] = (1.0 - head).max(0.0);
        transitions.extend(row);
    }
    EpisodicMdp::new(n_states, n_actions, horizon, 0, rewards, transitions).expect("sampled MDP is valid")
}

pub fn random_gapped(
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    target: f64,
    seed: u64,
) -> Result<EpisodicMdp, EnvError> {
    if n_states == 0 || n_actions == 0 || horizon == 0 {
        return Err(param("n_states/n_actions/horizon", "must all be at least 1"));
    }
    if !(target > 0.0) {
        return Err(param("gap_min", format!("must be positive, got {target}")));
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..MAX_GAPPED_ATTEMPTS {
        let mdp = random_mdp(n_states, n_actions, horizon, &mut rng);
        if gap_min(&mdp) >= target {
            return Ok(mdp);
        }
    }
    Err(EnvError::Rejection {
        target,
        attempts: MAX_GAPPED_ATTEMPTS,
    })
}

/// Random linear mixture: base kernel `j` moves each `(h, s, a)` to a
/// distinct random next state (while `j < |S|`), scaled by `1/√(Hd)`,
/// and `θ* = √(Hd)·w` with `w` uniform on the simplex. The mixed kernel
/// is then a convex combination of deterministic kernels, `‖φ_V‖₂ ≤ √H`,
/// and `C_θ = √(Hd)`.
pub fn mixture(
    d: usize,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    seed: u64,
) -> Result<LinearMixtureMdp, EnvError> {
    if d == 0 || n_states == 0 || n_actions == 0 || horizon == 0 {
        return Err(param("d/n_states/n_actions/horizon", "must all be at least 1"));
    }
    let mut rng = seeded_rng(seed);
    let scale = ((horizon * d) as f64).sqrt();
    let cells = horizon * n_states * n_actions;
    let rewards: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>()).collect();
    let targets: Vec<Vec<usize>> = (0..cells)
        .map(|_| {
            let mut perm: Vec<usize> = (0..n_states).collect();
            perm.shuffle(&mut rng);
            perm
        })
        .collect();
    let mut base = Vec::with_capacity(d * cells * n_states);
    for j in 0..d {
        for perm in &targets {
            let target = perm[j % n_states];
            base.extend((0..n_states).map(|s| if s == target { 1.0 / scale } else { 0.0 }));
        }
    }
    let theta: Vec<f64> = simplex(d, &mut rng).into_iter().map(|w| w * scale).collect();
    Ok(LinearMixtureMdp::new(
        n_states,
        n_actions,
        horizon,
        0,
        rewards,
        base,
        theta,
        Some(scale),
    )?)
}
