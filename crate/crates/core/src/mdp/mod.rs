//! Finite-horizon episodic MDPs with deterministic, known rewards.
//!
//! Steps are 0-based throughout the crate: `h ∈ 0..horizon`, and value tables
//! carry one extra terminal layer at index `horizon` that is identically zero.

mod io;
mod mixture;
mod planning;
mod sampling;

pub use io::{MdpFile, MixtureFile};
pub use mixture::LinearMixtureMdp;
pub use planning::{exact_policy_value, exact_q_star, gap_min, gaps, greedy_policy, uniform_policy_value, GapTable};
pub use sampling::{sample_episode, Step, Trajectory};

use thiserror::Error;

/// Stochasticity tolerance for transition rows.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("n_states, n_actions and horizon must all be at least 1 (got {n_states}, {n_actions}, {horizon})")]
    EmptyDimension {
        n_states: usize,
        n_actions: usize,
        horizon: usize,
    },
    #[error("{field}: expected length {expected} at {path}, found {found}")]
    Shape {
        field: &'static str,
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("reward r[{h}][{s}][{a}] = {value} is outside [0, 1]")]
    RewardOutOfRange { h: usize, s: usize, a: usize, value: f64 },
    #[error("transition P[{h}][{s}][{a}][{next}] = {value} is not a probability")]
    ProbabilityOutOfRange {
        h: usize,
        s: usize,
        a: usize,
        next: usize,
        value: f64,
    },
    #[error("transition row P[{h}][{s}][{a}] sums to {sum}, expected 1")]
    RowNotStochastic { h: usize, s: usize, a: usize, sum: f64 },
    #[error("initial state {state} out of range for {n_states} states")]
    InitialState { state: usize, n_states: usize },
    #[error("mixing vector has norm {norm} > bound {bound}")]
    ThetaNorm { norm: f64, bound: f64 },
    #[error("feature norm ‖φ_V({s},{a})‖ at step {h} is {norm}, exceeds √H = {limit}")]
    FeatureNorm {
        h: usize,
        s: usize,
        a: usize,
        norm: f64,
        limit: f64,
    },
    #[error("explicit transitions disagree with the mixed kernel at P[{h}][{s}][{a}][{next}]")]
    MixtureMismatch { h: usize, s: usize, a: usize, next: usize },
    #[error("policy action {action} at step {h}, state {s} is out of range")]
    PolicyAction { h: usize, s: usize, action: usize },
    #[error("invalid JSON: {0}")]
    Json(String),
}

/// A tabular episodic MDP `(S, A, P, r, H, s1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMdp {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    initial_state: usize,
    /// `rewards[(h * S + s) * A + a]`
    rewards: Vec<f64>,
    /// `transitions[((h * S + s) * A + a) * S + next]`
    transitions: Vec<f64>,
}

impl EpisodicMdp {
    /// Builds an MDP from flat row-major tables, validating every invariant.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        initial_state: usize,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
    ) -> Result<Self, MdpError> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(MdpError::EmptyDimension {
                n_states,
                n_actions,
                horizon,
            });
        }
        let cells = horizon * n_states * n_actions;
        if rewards.len() != cells {
            return Err(MdpError::Shape {
                field: "rewards",
                path: "(flat)".into(),
                expected: cells,
                found: rewards.len(),
            });
        }
        if transitions.len() != cells * n_states {
            return Err(MdpError::Shape {
                field: "transitions",
                path: "(flat)".into(),
                expected: cells * n_states,
                found: transitions.len(),
            });
        }
        if initial_state >= n_states {
            return Err(MdpError::InitialState {
                state: initial_state,
                n_states,
            });
        }
        let mdp = Self {
            n_states,
            n_actions,
            horizon,
            initial_state,
            rewards,
            transitions,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<(), MdpError> {
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                for a in 0..self.n_actions {
                    let r = self.reward(h, s, a);
                    if !(0.0..=1.0).contains(&r) {
                        return Err(MdpError::RewardOutOfRange { h, s, a, value: r });
                    }
                    let row = self.transition_row(h, s, a);
                    for (next, &p) in row.iter().enumerate() {
                        if !(0.0..=1.0).contains(&p) {
                            return Err(MdpError::ProbabilityOutOfRange {
                                h,
                                s,
                                a,
                                next,
                                value: p,
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOL {
                        return Err(MdpError::RowNotStochastic { h, s, a, sum });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    #[inline]
    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[(h * self.n_states + s) * self.n_actions + a]
    }

    #[inline]
    pub fn transition_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = ((h * self.n_states + s) * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    /// `⟨P_h(·|s,a), v⟩`
    #[inline]
    pub fn expect(&self, h: usize, s: usize, a: usize, v: &[f64]) -> f64 {
        self.transition_row(h, s, a).iter().zip(v).map(|(p, x)| p * x).sum()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Same MDP with every reward shifted by `delta` (must stay within [0,1]).
    pub fn with_reward_shift(&self, delta: f64) -> Result<Self, MdpError> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.horizon,
            self.initial_state,
            self.rewards.iter().map(|r| r + delta).collect(),
            self.transitions.clone(),
        )
    }
}

/// A deterministic, step-dependent policy `π_h: S → A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    n_states: usize,
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(horizon: usize, n_states: usize, actions: Vec<usize>) -> Self {
        assert_eq!(actions.len(), horizon * n_states, "policy table shape");
        Self { n_states, actions }
    }

    /// Policy that plays the same action everywhere.
    pub fn constant(horizon: usize, n_states: usize, action: usize) -> Self {
        Self::new(horizon, n_states, vec![action; horizon * n_states])
    }

    #[inline]
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.n_states + s]
    }

    pub fn horizon(&self) -> usize {
        self.actions.len() / self.n_states
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn validate_for(&self, mdp: &EpisodicMdp) -> Result<(), MdpError> {
        if self.n_states != mdp.n_states() || self.horizon() != mdp.horizon() {
            return Err(MdpError::Shape {
                field: "policy",
                path: "(flat)".into(),
                expected: mdp.n_states() * mdp.horizon(),
                found: self.actions.len(),
            });
        }
        for h in 0..self.horizon() {
            for s in 0..self.n_states {
                let action = self.action(h, s);
                if action >= mdp.n_actions() {
                    return Err(MdpError::PolicyAction { h, s, action });
                }
            }
        }
        Ok(())
    }
}

/// `Q_h(s,a)` and `V_h(s)` for `h ∈ 0..=H`, with the terminal layer zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl ValueTables {
    pub fn zeros(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        Self {
            horizon,
            n_states,
            n_actions,
            q: vec![0.0; (horizon + 1) * n_states * n_actions],
            v: vec![0.0; (horizon + 1) * n_states],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.n_states + s) * self.n_actions + a]
    }

    #[inline]
    pub fn set_q(&mut self, h: usize, s: usize, a: usize, value: f64) {
        self.q[(h * self.n_states + s) * self.n_actions + a] = value;
    }

    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.n_states + s]
    }

    #[inline]
    pub fn set_v(&mut self, h: usize, s: usize, value: f64) {
        self.v[h * self.n_states + s] = value;
    }

    /// The state-value vector at step `h` (length `n_states`).
    pub fn v_row(&self, h: usize) -> &[f64] {
        &self.v[h * self.n_states..(h + 1) * self.n_states]
    }

    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.n_states + s) * self.n_actions;
        &self.q[start..start + self.n_actions]
    }
}

/// Index of the largest entry, ties broken towards the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate().skip(1) {
        if x > values[best] {
            best = i;
        }
    }
    best
}
