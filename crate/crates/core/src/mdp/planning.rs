use super::{argmax_lowest, EpisodicMdp, Policy, ValueTables};

/// Gaps at or below this are treated as exact ties when taking `gap_min`.
pub const GAP_ZERO_TOL: f64 = 1e-10;

/// Optimal `Q*`, `V*` by backward induction.
pub fn exact_q_star(mdp: &EpisodicMdp) -> ValueTables {
    let (horizon, n_s, n_a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut tables = ValueTables::zeros(horizon, n_s, n_a);
    for h in (0..horizon).rev() {
        let next = tables.v_row(h + 1).to_vec();
        for s in 0..n_s {
            let mut best = f64::NEG_INFINITY;
            for a in 0..n_a {
                let q = mdp.reward(h, s, a) + mdp.expect(h, s, a, &next);
                tables.set_q(h, s, a, q);
                best = best.max(q);
            }
            tables.set_v(h, s, best);
        }
    }
    tables
}

/// `Q^π`, `V^π` for a deterministic policy.
pub fn exact_policy_value(mdp: &EpisodicMdp, policy: &Policy) -> ValueTables {
    let (horizon, n_s, n_a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut tables = ValueTables::zeros(horizon, n_s, n_a);
    for h in (0..horizon).rev() {
        let next = tables.v_row(h + 1).to_vec();
        for s in 0..n_s {
            for a in 0..n_a {
                tables.set_q(h, s, a, mdp.reward(h, s, a) + mdp.expect(h, s, a, &next));
            }
            tables.set_v(h, s, tables.q(h, s, policy.action(h, s)));
        }
    }
    tables
}

/// Values of the policy that picks actions uniformly at random at every step.
pub fn uniform_policy_value(mdp: &EpisodicMdp) -> ValueTables {
    let (horizon, n_s, n_a) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut tables = ValueTables::zeros(horizon, n_s, n_a);
    for h in (0..horizon).rev() {
        let next = tables.v_row(h + 1).to_vec();
        for s in 0..n_s {
            let mut total = 0.0;
            for a in 0..n_a {
                let q = mdp.reward(h, s, a) + mdp.expect(h, s, a, &next);
                tables.set_q(h, s, a, q);
                total += q;
            }
            tables.set_v(h, s, total / n_a as f64);
        }
    }
    tables
}

/// Greedy policy over a Q table, lowest action index on ties.
pub fn greedy_policy(tables: &ValueTables) -> Policy {
    let (horizon, n_s) = (tables.horizon(), tables.n_states());
    let mut actions = Vec::with_capacity(horizon * n_s);
    for h in 0..horizon {
        for s in 0..n_s {
            actions.push(argmax_lowest(tables.q_row(h, s)));
        }
    }
    Policy::new(horizon, n_s, actions)
}

/// `gap_h(s,a) = V*_h(s) − Q*_h(s,a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl GapTable {
    #[inline]
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.values[(h * self.n_states + s) * self.n_actions + a]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Smallest gap above [`GAP_ZERO_TOL`], or `+∞` when every gap is zero.
    pub fn min_positive(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|&g| g > GAP_ZERO_TOL)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn gaps(mdp: &EpisodicMdp) -> GapTable {
    gaps_from(&exact_q_star(mdp))
}

pub(crate) fn gaps_from(q_star: &ValueTables) -> GapTable {
    let (horizon, n_s, n_a) = (q_star.horizon(), q_star.n_states(), q_star.n_actions());
    let mut values = Vec::with_capacity(horizon * n_s * n_a);
    for h in 0..horizon {
        for s in 0..n_s {
            let v = q_star.v(h, s);
            for a in 0..n_a {
                values.push((v - q_star.q(h, s, a)).max(0.0));
            }
        }
    }
    GapTable {
        horizon,
        n_states: n_s,
        n_actions: n_a,
        values,
    }
}

/// Minimum strictly positive gap; `f64::INFINITY` if the MDP has none.
pub fn gap_min(mdp: &EpisodicMdp) -> f64 {
    gaps(mdp).min_positive()
}
