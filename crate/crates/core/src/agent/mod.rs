//! The low-switching-cost optimistic value-iteration loop.
//!
//! The agent replans only in episodes where some sub-sampled dataset `Ẑ_h`
//! changed. Regression always uses the full history; bonuses use `Ẑ_h`.

mod beta;
mod log;

pub use beta::{
    compute_beta, eluder_dim_bound, theory_beta_model_based, theory_beta_model_free, BetaSchedule, EstimatorKind,
};
pub use log::{EpisodeRecord, GapHistogram, RunLog, RunSummary, SUBOPT_TOL};

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::function_class::{
    linear, ClassError, ConfidenceParams, Covariate, FunctionClass, LinearClass, RegressionDataset, SubsampledDataset,
};
use crate::mdp::{
    exact_policy_value, exact_q_star, gap_min, greedy_policy, sample_episode, EpisodicMdp, LinearMixtureMdp, Policy,
    Trajectory, ValueTables,
};
use crate::seed::seeded_rng;
use crate::subsampler::{decide, SamplerConfig, SamplerError, SamplerMode};

/// Tolerance for the `Q ≥ Q*` optimism comparisons.
pub const OPTIMISM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// The environment an agent interacts with.
#[derive(Debug, Clone)]
pub enum Environment {
    Tabular(Arc<EpisodicMdp>),
    Mixture(Arc<LinearMixtureMdp>),
}

impl Environment {
    pub fn mdp(&self) -> &EpisodicMdp {
        match self {
            Environment::Tabular(m) => m,
            Environment::Mixture(m) => m.mdp(),
        }
    }

    pub fn mixture(&self) -> Option<&Arc<LinearMixtureMdp>> {
        match self {
            Environment::Mixture(m) => Some(m),
            Environment::Tabular(_) => None,
        }
    }
}

/// Features for a model-free linear class, row-major over `(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearFeatures {
    pub features: Vec<Vec<f64>>,
    pub bound: f64,
}

fn default_delta() -> f64 {
    0.1
}

fn default_sampler_constant() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub estimator: EstimatorKind,
    /// Model-free only: use a linear class instead of the tabular one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<LinearFeatures>,
    #[serde(default)]
    pub beta: BetaSchedule,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub episodes: usize,
    #[serde(default = "default_sampler_constant")]
    pub sampler_constant: f64,
    #[serde(default)]
    pub seed: u64,
    /// Replan every episode regardless of dataset changes.
    #[serde(default)]
    pub always_switch: bool,
    /// Regress on the accepted arrivals (weighted by copies) instead of the
    /// full history.
    #[serde(default)]
    pub regress_on_subsample: bool,
    /// Keep every arrival with one copy.
    #[serde(default)]
    pub always_accept: bool,
    /// Fill the `replan_ms` column with wall time.
    #[serde(default)]
    pub record_timing: bool,
}

impl AgentConfig {
    pub fn model_free(episodes: usize, beta: BetaSchedule) -> Self {
        Self {
            estimator: EstimatorKind::ModelFree,
            features: None,
            beta,
            delta: default_delta(),
            episodes,
            sampler_constant: default_sampler_constant(),
            seed: 0,
            always_switch: false,
            regress_on_subsample: false,
            always_accept: false,
            record_timing: false,
        }
    }

    pub fn model_based(episodes: usize, beta: BetaSchedule) -> Self {
        Self {
            estimator: EstimatorKind::ModelBased,
            ..Self::model_free(episodes, beta)
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.episodes == 0 {
            return Err(AgentError::Config("episodes must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AgentError::Config(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        match self.beta {
            BetaSchedule::Fixed { value } if !(value > 0.0) => {
                Err(AgentError::Config(format!("fixed beta must be positive, got {value}")))
            }
            BetaSchedule::Theory { constant } if !(constant > 0.0) => Err(AgentError::Config(format!(
                "theory constant must be positive, got {constant}"
            ))),
            _ if !(self.sampler_constant > 0.0) => Err(AgentError::Config(format!(
                "sampler_constant must be positive, got {}",
                self.sampler_constant
            ))),
            _ if self.estimator == EstimatorKind::ModelBased && self.features.is_some() => Err(AgentError::Config(
                "features apply to the model-free estimator only".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// `(s, a, s') → (count, reward)` for one step.
type TransitionCounts = BTreeMap<(usize, usize, usize), (u64, f64)>;

/// Grouped full-history statistics.
#[derive(Debug, Clone)]
enum History {
    ModelFree(Vec<TransitionCounts>),
    /// Per step normal equations `Σ φφᵀ`, `Σ φ·V(s')`.
    ModelBased(Vec<(DMatrix<f64>, DVector<f64>)>),
}

/// Mutable state of a run.
#[derive(Debug, Clone)]
pub struct AgentState {
    /// Episode of the last replan (1-based, 0 before the first plan).
    pub last_replan: usize,
    pub datasets: Vec<SubsampledDataset>,
    pub tables: ValueTables,
    /// `b_h(s,a)` at `[(h·S + s)·A + a]`.
    pub bonus: Vec<f64>,
    pub policy: Policy,
    pub n_switch_ds: u64,
    pub n_switch_pi: u64,
    grams: Vec<Option<DMatrix<f64>>>,
    history: History,
    subsample_history: History,
}

pub struct Agent {
    config: AgentConfig,
    env: Environment,
    classes: Vec<FunctionClass>,
    params: ConfidenceParams,
    sampler: SamplerConfig,
    state: AgentState,
}

impl Agent {
    pub fn new(config: AgentConfig, env: Environment) -> Result<Self, AgentError> {
        config.validate()?;
        let mdp = env.mdp();
        let (horizon, n_s, n_a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
        let classes: Vec<FunctionClass> = match config.estimator {
            EstimatorKind::ModelFree => {
                let class = match &config.features {
                    None => FunctionClass::tabular(n_s, n_a, horizon as f64 + 1.0),
                    Some(f) => {
                        if f.features.len() != n_s * n_a || f.features.is_empty() || f.features[0].is_empty() {
                            return Err(AgentError::Config(format!(
                                "features must have {} nonempty rows of equal length",
                                n_s * n_a
                            )));
                        }
                        let d = f.features[0].len();
                        if f.features.iter().any(|r| r.len() != d) {
                            return Err(AgentError::Config("ragged feature rows".into()));
                        }
                        FunctionClass::Linear(LinearClass::from_table(n_s, n_a, f.features.clone(), f.bound))
                    }
                };
                vec![class; horizon]
            }
            EstimatorKind::ModelBased => {
                let mixture = env.mixture().ok_or_else(|| {
                    AgentError::Config("model-based estimator needs a linear mixture environment".into())
                })?;
                (0..horizon)
                    .map(|h| FunctionClass::Linear(LinearClass::mixture_induced(mixture.clone(), h)))
                    .collect()
            }
        };
        let total_steps = (config.episodes * horizon) as u64;
        let beta = compute_beta(
            &config.beta,
            config.estimator,
            &classes[0],
            horizon,
            total_steps,
            config.delta,
            n_s * n_a,
        );
        let params = ConfidenceParams::for_run(beta, config.episodes, horizon, config.delta)?;
        let mode = match config.estimator {
            EstimatorKind::ModelFree => SamplerMode::ModelFree,
            EstimatorKind::ModelBased => SamplerMode::ModelBased,
        };
        let mut sampler = SamplerConfig::new(config.sampler_constant, config.delta, total_steps, &classes[0], mode)?;
        sampler.always_accept = config.always_accept;

        let grams = classes
            .iter()
            .map(|c| match c {
                FunctionClass::Linear(l) => Some(DMatrix::zeros(l.dim, l.dim)),
                FunctionClass::Tabular(_) => None,
            })
            .collect();
        let empty_history = || match config.estimator {
            EstimatorKind::ModelFree => History::ModelFree(vec![BTreeMap::new(); horizon]),
            EstimatorKind::ModelBased => {
                let d = env.mixture().map_or(0, |m| m.dim());
                History::ModelBased(vec![(DMatrix::zeros(d, d), DVector::zeros(d)); horizon])
            }
        };
        let state = AgentState {
            last_replan: 0,
            datasets: vec![SubsampledDataset::new(); horizon],
            tables: ValueTables::zeros(horizon, n_s, n_a),
            bonus: vec![0.0; horizon * n_s * n_a],
            policy: Policy::constant(horizon, n_s, 0),
            n_switch_ds: 0,
            n_switch_pi: 0,
            grams,
            history: empty_history(),
            subsample_history: empty_history(),
        };
        Ok(Self {
            config,
            env,
            classes,
            params,
            sampler,
            state,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    pub fn params(&self) -> &ConfidenceParams {
        &self.params
    }

    pub fn sampler(&self) -> &SamplerConfig {
        &self.sampler
    }

    pub fn class(&self, h: usize) -> &FunctionClass {
        &self.classes[h]
    }

    fn covariate(&self, s: usize, a: usize, next_v: &[f64]) -> Covariate {
        match self.config.estimator {
            EstimatorKind::ModelFree => Covariate::model_free(s, a),
            EstimatorKind::ModelBased => Covariate::model_based(s, a, next_v.to_vec()),
        }
    }

    fn width_at(&self, h: usize, z: &Covariate) -> Result<f64, ClassError> {
        match (&self.classes[h], &self.state.grams[h]) {
            (FunctionClass::Linear(l), Some(g)) => l.width_with_gram(g, &self.params, z),
            (class, _) => class.width(&self.state.datasets[h], &self.params, z),
        }
    }

    fn sensitivity_at(&self, h: usize, z: &Covariate) -> Result<f64, ClassError> {
        match (&self.classes[h], &self.state.grams[h]) {
            (FunctionClass::Linear(l), Some(g)) => l.sensitivity_with_gram(g, &self.params, z),
            (class, _) => class.sensitivity(&self.state.datasets[h], &self.params, z),
        }
    }

    fn history(&self) -> &History {
        if self.config.regress_on_subsample {
            &self.state.subsample_history
        } else {
            &self.state.history
        }
    }

    /// Model-free step estimate: `min{f̂ + b, H}` with `f̂` the least-squares
    /// fit to `r + V_{h+1}(s')` over the history. Returns `(Q_h, b_h)`
    /// flattened over `(s, a)`.
    pub fn q_estimate_model_free(&self, h: usize, next_v: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
        let History::ModelFree(steps) = self.history() else {
            return Err(AgentError::Config("agent is not model-free".into()));
        };
        let mdp = self.env.mdp();
        let (n_s, n_a, cap) = (mdp.n_states(), mdp.n_actions(), mdp.horizon() as f64);
        let mut data = RegressionDataset::new();
        for (&(s, a, next), &(count, reward)) in &steps[h] {
            data.push_weighted(Covariate::model_free(s, a), reward + next_v[next], count);
        }
        let fitted = self.classes[h].fit(&data)?;
        let mut q = Vec::with_capacity(n_s * n_a);
        let mut bonus = Vec::with_capacity(n_s * n_a);
        for s in 0..n_s {
            for a in 0..n_a {
                let z = Covariate::model_free(s, a);
                let b = self.width_at(h, &z)?;
                q.push((fitted.eval(&self.classes[h], &z)? + b).clamp(0.0, cap));
                bonus.push(b);
            }
        }
        Ok((q, bonus))
    }

    /// Model-based step estimate: `min{r + θ̂ᵀφ_V + b, H}` with `θ̂` from
    /// value-targeted regression.
    pub fn q_estimate_model_based(&self, h: usize, next_v: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
        let History::ModelBased(steps) = self.history() else {
            return Err(AgentError::Config("agent is not model-based".into()));
        };
        let FunctionClass::Linear(class) = &self.classes[h] else {
            return Err(AgentError::Config("model-based class must be linear".into()));
        };
        let mdp = self.env.mdp();
        let (n_s, n_a, cap) = (mdp.n_states(), mdp.n_actions(), mdp.horizon() as f64);
        let theta = solve_projected(&steps[h].0, &steps[h].1, class.bound);
        let mut q = Vec::with_capacity(n_s * n_a);
        let mut bonus = Vec::with_capacity(n_s * n_a);
        for s in 0..n_s {
            for a in 0..n_a {
                let z = Covariate::model_based(s, a, next_v.to_vec());
                let phi = class.feature(&z)?;
                let b = self.width_at(h, &z)?;
                q.push((mdp.reward(h, s, a) + theta.dot(&phi) + b).clamp(0.0, cap));
                bonus.push(b);
            }
        }
        Ok((q, bonus))
    }

    /// Backward pass over `h = H−1, …, 0`, then greedy policy extraction.
    pub fn replan(&mut self, episode: usize) -> Result<(), AgentError> {
        let mdp = self.env.mdp();
        let (horizon, n_s, n_a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
        let mut tables = ValueTables::zeros(horizon, n_s, n_a);
        let mut bonus = vec![0.0; horizon * n_s * n_a];
        for h in (0..horizon).rev() {
            let next_v = tables.v_row(h + 1).to_vec();
            let (q, b) = match self.config.estimator {
                EstimatorKind::ModelFree => self.q_estimate_model_free(h, &next_v)?,
                EstimatorKind::ModelBased => self.q_estimate_model_based(h, &next_v)?,
            };
            bonus[h * n_s * n_a..(h + 1) * n_s * n_a].copy_from_slice(&b);
            for s in 0..n_s {
                let mut best = f64::NEG_INFINITY;
                for a in 0..n_a {
                    let value = q[s * n_a + a];
                    tables.set_q(h, s, a, value);
                    best = best.max(value);
                }
                tables.set_v(h, s, best);
            }
        }
        self.state.policy = greedy_policy(&tables);
        self.state.tables = tables;
        self.state.bonus = bonus;
        self.state.last_replan = episode;
        self.state.n_switch_ds += 1;
        Ok(())
    }

    /// Feeds the previous episode's covariates to the samplers. Returns the
    /// sum of inclusion probabilities and whether any dataset changed.
    pub fn feed<R: Rng + ?Sized>(&mut self, traj: &Trajectory, rng: &mut R) -> Result<(f64, bool), AgentError> {
        let mut changed = false;
        let mut prob_sum = 0.0;
        for step in &traj.steps {
            let h = step.h;
            let next_v = self.state.tables.v_row(h + 1).to_vec();
            let z = self.covariate(step.state, step.action, &next_v);
            let sens = if self.sampler.always_accept {
                1.0
            } else {
                self.sensitivity_at(h, &z)?
            };
            let decision = decide(&self.sampler, sens, rng)?;
            prob_sum += decision.probability;
            if decision.accepted {
                changed = true;
                if let (FunctionClass::Linear(l), Some(g)) = (&self.classes[h], &mut self.state.grams[h]) {
                    let phi = l.feature(&z)?;
                    g.ger(decision.copies as f64, &phi, &phi, 1.0);
                }
                self.state.datasets[h].insert(z.clone(), decision.copies);
                record(
                    &mut self.state.subsample_history,
                    &self.classes[h],
                    h,
                    &z,
                    step.next_state,
                    step.reward,
                    &next_v,
                    decision.copies,
                )?;
            }
        }
        Ok((prob_sum, changed))
    }

    /// Appends an episode played under the current plan to the full history.
    pub fn observe(&mut self, traj: &Trajectory) -> Result<(), AgentError> {
        for step in &traj.steps {
            let h = step.h;
            let next_v = self.state.tables.v_row(h + 1).to_vec();
            let z = self.covariate(step.state, step.action, &next_v);
            record(
                &mut self.state.history,
                &self.classes[h],
                h,
                &z,
                step.next_state,
                step.reward,
                &next_v,
                1,
            )?;
        }
        Ok(())
    }

    /// Current value-targeted regression estimates per step and pooled.
    pub fn theta_estimates(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let History::ModelBased(steps) = self.history() else {
            return None;
        };
        let bound = self.env.mixture()?.theta_bound();
        let per_step = steps
            .iter()
            .map(|(a, b)| solve_projected(a, b, bound).iter().copied().collect())
            .collect();
        let d = steps[0].1.len();
        let (mut a_all, mut b_all) = (DMatrix::zeros(d, d), DVector::zeros(d));
        for (a, b) in steps {
            a_all += a;
            b_all += b;
        }
        Some((
            per_step,
            solve_projected(&a_all, &b_all, bound).iter().copied().collect(),
        ))
    }

    /// Plays `K` episodes and returns the log.
    pub fn run(mut self) -> Result<RunLog, AgentError> {
        let mut rng = seeded_rng(self.config.seed);
        let env = self.env.clone();
        let mdp = env.mdp();
        let (horizon, n_s, n_a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
        let q_star = exact_q_star(mdp);
        let s0 = mdp.initial_state();
        let v_star = q_star.v(0, s0);
        let g_min = gap_min(mdp);
        let mut hist = GapHistogram::new(g_min, horizon);

        let mut records = Vec::with_capacity(self.config.episodes);
        let mut cum = 0.0;
        let mut prev_policy: Option<Policy> = None;
        let mut prev_traj: Option<Trajectory> = None;
        let mut pi_values = ValueTables::zeros(horizon, n_s, n_a);
        let mut plan_optimistic = 0u64;
        let (mut optimistic_total, mut optimism_checks) = (0u64, 0u64);
        let mut violations = 0u64;
        let mut bonus_sum = 0.0;
        let mut prob_sum = 0.0;

        for k in 1..=self.config.episodes {
            let mut replan = k == 1 || self.config.always_switch;
            if let Some(traj) = prev_traj.take() {
                let (p, changed) = self.feed(&traj, &mut rng)?;
                prob_sum += p;
                replan |= changed;
            }
            let mut replan_ms = 0.0;
            if replan {
                let start = Instant::now();
                self.replan(k)?;
                if self.config.record_timing {
                    replan_ms = start.elapsed().as_secs_f64() * 1e3;
                }
                pi_values = exact_policy_value(mdp, &self.state.policy);
                plan_optimistic = count_optimistic(&self.state.tables, &q_star);
            }
            let switch_pi = prev_policy.as_ref().is_some_and(|p| *p != self.state.policy);
            if switch_pi {
                self.state.n_switch_pi += 1;
            }

            let traj = sample_episode(mdp, &self.state.policy, &mut rng);
            for step in &traj.steps {
                let (h, s, a) = (step.h, step.state, step.action);
                if self.state.tables.q(h, s, a) < q_star.q(h, s, a) - OPTIMISM_TOL {
                    violations += 1;
                }
                bonus_sum += self.state.bonus[(h * n_s + s) * n_a + a];
                hist.record(q_star.v(h, s) - pi_values.q(h, s, a));
            }
            optimistic_total += plan_optimistic;
            optimism_checks += (horizon * n_s * n_a) as u64;
            self.observe(&traj)?;

            let inst = (v_star - pi_values.v(0, s0)).max(0.0);
            cum += inst;
            records.push(EpisodeRecord {
                episode: k,
                inst_regret: inst,
                cum_regret: cum,
                switch_ds: replan,
                switch_pi,
                zhat_mass: self.state.datasets.iter().map(SubsampledDataset::total_mass).sum(),
                replan_ms,
            });
            prev_policy = Some(self.state.policy.clone());
            prev_traj = Some(traj);
        }

        let thetas = self.theta_estimates();
        let variant = if self.config.always_switch {
            "always_switch"
        } else {
            "agent"
        };
        let summary = RunSummary {
            variant: variant.into(),
            episodes: self.config.episodes,
            horizon,
            n_switch_ds: self.state.n_switch_ds,
            n_switch_pi: self.state.n_switch_pi,
            final_regret: cum,
            gap_min: g_min.is_finite().then_some(g_min),
            beta: self.params.beta,
            log_net: self.sampler.log_net,
            optimism_fraction: optimistic_total as f64 / optimism_checks.max(1) as f64,
            visited_violations: violations,
            bonus_sum,
            probability_sum: prob_sum,
            gap_histogram: hist,
            theta_star: env.mixture().map(|m| m.theta().to_vec()),
            theta_hat: thetas.as_ref().map(|t| t.0.clone()),
            theta_hat_pooled: thetas.map(|t| t.1),
        };
        Ok(RunLog {
            config_hash: String::new(),
            seed: self.config.seed,
            records,
            summary,
            datasets: self.state.datasets,
        })
    }
}

/// Runs one agent end to end.
pub fn run(config: AgentConfig, env: Environment) -> Result<RunLog, AgentError> {
    Agent::new(config, env)?.run()
}

fn count_optimistic(tables: &ValueTables, q_star: &ValueTables) -> u64 {
    let mut n = 0;
    for h in 0..tables.horizon() {
        for s in 0..tables.n_states() {
            for a in 0..tables.n_actions() {
                if tables.q(h, s, a) >= q_star.q(h, s, a) - OPTIMISM_TOL {
                    n += 1;
                }
            }
        }
    }
    n
}

#[allow(clippy::too_many_arguments)]
fn record(
    history: &mut History,
    class: &FunctionClass,
    h: usize,
    z: &Covariate,
    next_state: usize,
    reward: f64,
    next_v: &[f64],
    weight: u64,
) -> Result<(), ClassError> {
    match history {
        History::ModelFree(steps) => {
            let entry = steps[h]
                .entry((z.state(), z.action(), next_state))
                .or_insert((0, reward));
            entry.0 += weight;
        }
        History::ModelBased(steps) => {
            let FunctionClass::Linear(l) = class else {
                return Err(ClassError::CovariateMismatch);
            };
            let phi = l.feature(z)?;
            let (a, b) = &mut steps[h];
            a.ger(weight as f64, &phi, &phi, 1.0);
            b.axpy(weight as f64 * next_v[next_state], &phi, 1.0);
        }
    }
    Ok(())
}

/// Ridge-stabilised least squares projected onto `‖θ‖ ≤ bound`.
fn solve_projected(a: &DMatrix<f64>, b: &DVector<f64>, bound: f64) -> DVector<f64> {
    let mut theta = linear::ridge_solve(a, b);
    let norm = theta.norm();
    if norm > bound {
        theta *= bound / norm;
    }
    theta
}
