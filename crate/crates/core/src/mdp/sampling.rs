use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EpisodicMdp, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub h: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// One episode: exactly `horizon` chained steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Inverse-CDF draw from a probability row using one uniform variate.
pub(crate) fn draw_from_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

pub fn sample_episode<R: Rng + ?Sized>(mdp: &EpisodicMdp, policy: &Policy, rng: &mut R) -> Trajectory {
    let mut state = mdp.initial_state();
    let mut steps = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let action = policy.action(h, state);
        let next_state = draw_from_row(mdp.transition_row(h, state, action), rng);
        steps.push(Step {
            h,
            state,
            action,
            reward: mdp.reward(h, state, action),
            next_state,
        });
        state = next_state;
    }
    Trajectory { steps }
}
