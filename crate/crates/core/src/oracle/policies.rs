use super::OracleError;
use crate::mdp::EpisodicMdp;

pub const DEFAULT_POLICY_BUDGET: u64 = 100_000;

/// `V^π_0(s_0)` for every deterministic policy.
///
/// Policy `i` plays digit `(h·S + s)` of `i` written in base `|A|`, least
/// significant digit first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValues {
    pub n_actions: usize,
    pub slots: usize,
    pub values: Vec<f64>,
}

impl PolicyValues {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Action table `[h·S + s]` of policy `index`.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut actions = Vec::with_capacity(self.slots);
        for _ in 0..self.slots {
            actions.push(index % self.n_actions);
            index /= self.n_actions;
        }
        actions
    }
}

fn check_budget(mdp: &EpisodicMdp, budget: u64) -> Result<usize, OracleError> {
    let needed = (mdp.n_actions() as f64).powi((mdp.n_states() * mdp.horizon()) as i32);
    if needed > budget as f64 {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    Ok(needed as usize)
}

/// Calls `visit(index, V^π_0(s_0))` for every deterministic policy.
///
/// Depth-first forward induction: the state distribution after step `h`
/// is shared by every policy agreeing on steps `0..=h`.
pub fn for_each_policy_value(
    mdp: &EpisodicMdp,
    budget: u64,
    mut visit: impl FnMut(usize, f64),
) -> Result<(), OracleError> {
    check_budget(mdp, budget)?;
    let mut dist = vec![0.0; mdp.n_states()];
    dist[mdp.initial_state()] = 1.0;
    descend(mdp, 0, &dist, 0.0, 0, 1, &mut visit);
    Ok(())
}

pub fn brute_force_policy_values(mdp: &EpisodicMdp, budget: u64) -> Result<PolicyValues, OracleError> {
    let mut values = vec![0.0; check_budget(mdp, budget)?];
    for_each_policy_value(mdp, budget, |i, v| values[i] = v)?;
    Ok(PolicyValues {
        n_actions: mdp.n_actions(),
        slots: mdp.n_states() * mdp.horizon(),
        values,
    })
}

/// `max_π V^π_0(s_0)` over all deterministic policies, without storing them.
pub fn brute_force_optimal_value(mdp: &EpisodicMdp, budget: u64) -> Result<f64, OracleError> {
    let mut best = f64::NEG_INFINITY;
    for_each_policy_value(mdp, budget, |_, v| best = best.max(v))?;
    Ok(best)
}

/// Enumerates the step-`h` action table with an odometer; `index` holds
/// the digits of steps `0..h` and `place = |A|^(h·S)`.
fn descend(
    mdp: &EpisodicMdp,
    h: usize,
    dist: &[f64],
    value: f64,
    index: usize,
    place: usize,
    visit: &mut impl FnMut(usize, f64),
) {
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    if h + 1 == mdp.horizon() {
        return leaves(mdp, h, dist, value, index, place, visit);
    }
    let mut actions = vec![0; n_s];
    let mut next = vec![0.0; n_s];
    loop {
        let mut v = value;
        let mut idx = index;
        let mut p = place;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, &a) in actions.iter().enumerate() {
            idx += a * p;
            p *= n_a;
            let mass = dist[s];
            if mass == 0.0 {
                continue;
            }
            v += mass * mdp.reward(h, s, a);
            for (n, q) in next.iter_mut().zip(mdp.transition_row(h, s, a)) {
                *n += mass * q;
            }
        }
        descend(mdp, h + 1, &next, v, idx, p, visit);
        if !advance(&mut actions, n_a) {
            return;
        }
    }
}

/// Last step: only rewards change, so the value is updated per odometer tick.
fn leaves(
    mdp: &EpisodicMdp,
    h: usize,
    dist: &[f64],
    value: f64,
    index: usize,
    place: usize,
    visit: &mut impl FnMut(usize, f64),
) {
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let weights: Vec<usize> = (0..n_s).map(|s| place * n_a.pow(s as u32)).collect();
    let mut actions = vec![0; n_s];
    let mut v = value + (0..n_s).map(|s| dist[s] * mdp.reward(h, s, 0)).sum::<f64>();
    let mut idx = index;
    loop {
        visit(idx, v);
        let mut s = 0;
        loop {
            if s == n_s {
                return;
            }
            let a = actions[s];
            if a + 1 < n_a {
                actions[s] = a + 1;
                v += dist[s] * (mdp.reward(h, s, a + 1) - mdp.reward(h, s, a));
                idx += weights[s];
                break;
            }
            actions[s] = 0;
            v += dist[s] * (mdp.reward(h, s, 0) - mdp.reward(h, s, a));
            idx -= a * weights[s];
            s += 1;
        }
    }
}

fn advance(actions: &mut [usize], n_a: usize) -> bool {
    for a in actions.iter_mut() {
        *a += 1;
        if *a < n_a {
            return true;
        }
        *a = 0;
    }
    false
}
