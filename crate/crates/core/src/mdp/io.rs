//! JSON schema for MDP definition files.
//!
//! Plain MDP:
//! `{n_states, n_actions, horizon, rewards[h][s][a], transitions[h][s][a][s'], initial_state}`.
//! Linear mixture: the same fields with `transitions` optional, plus
//! `{d, theta, base_kernels[j][h][s][a][s'], theta_bound?}`.

use serde::{Deserialize, Serialize};

use super::{EpisodicMdp, LinearMixtureMdp, MdpError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub initial_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub rewards: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    pub initial_state: usize,
    pub d: usize,
    pub theta: Vec<f64>,
    pub base_kernels: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_bound: Option<f64>,
}

fn check_len(field: &'static str, path: &str, expected: usize, found: usize) -> Result<(), MdpError> {
    if expected == found {
        Ok(())
    } else {
        Err(MdpError::Shape {
            field,
            path: path.to_string(),
            expected,
            found,
        })
    }
}

fn flatten_rewards(r: &[Vec<Vec<f64>>], n_s: usize, n_a: usize, horizon: usize) -> Result<Vec<f64>, MdpError> {
    check_len("rewards", "rewards", horizon, r.len())?;
    let mut out = Vec::with_capacity(horizon * n_s * n_a);
    for (h, layer) in r.iter().enumerate() {
        check_len("rewards", &format!("rewards[{h}]"), n_s, layer.len())?;
        for (s, row) in layer.iter().enumerate() {
            check_len("rewards", &format!("rewards[{h}][{s}]"), n_a, row.len())?;
            out.extend_from_slice(row);
        }
    }
    Ok(out)
}

fn flatten_kernel(
    field: &'static str,
    prefix: &str,
    p: &[Vec<Vec<Vec<f64>>>],
    n_s: usize,
    n_a: usize,
    horizon: usize,
) -> Result<Vec<f64>, MdpError> {
    check_len(field, prefix, horizon, p.len())?;
    let mut out = Vec::with_capacity(horizon * n_s * n_a * n_s);
    for (h, layer) in p.iter().enumerate() {
        check_len(field, &format!("{prefix}[{h}]"), n_s, layer.len())?;
        for (s, rows) in layer.iter().enumerate() {
            check_len(field, &format!("{prefix}[{h}][{s}]"), n_a, rows.len())?;
            for (a, row) in rows.iter().enumerate() {
                check_len(field, &format!("{prefix}[{h}][{s}][{a}]"), n_s, row.len())?;
                out.extend_from_slice(row);
            }
        }
    }
    Ok(out)
}

fn nest_rewards(mdp: &EpisodicMdp) -> Vec<Vec<Vec<f64>>> {
    (0..mdp.horizon())
        .map(|h| {
            (0..mdp.n_states())
                .map(|s| (0..mdp.n_actions()).map(|a| mdp.reward(h, s, a)).collect())
                .collect()
        })
        .collect()
}

fn nest_kernel(
    n_s: usize,
    n_a: usize,
    horizon: usize,
    row: impl Fn(usize, usize, usize) -> Vec<f64>,
) -> Vec<Vec<Vec<Vec<f64>>>> {
    (0..horizon)
        .map(|h| (0..n_s).map(|s| (0..n_a).map(|a| row(h, s, a)).collect()).collect())
        .collect()
}

impl MdpFile {
    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        serde_json::from_str(text).map_err(|e| MdpError::Json(e.to_string()))
    }

    pub fn into_mdp(self) -> Result<EpisodicMdp, MdpError> {
        let rewards = flatten_rewards(&self.rewards, self.n_states, self.n_actions, self.horizon)?;
        let transitions = flatten_kernel(
            "transitions",
            "transitions",
            &self.transitions,
            self.n_states,
            self.n_actions,
            self.horizon,
        )?;
        EpisodicMdp::new(
            self.n_states,
            self.n_actions,
            self.horizon,
            self.initial_state,
            rewards,
            transitions,
        )
    }

    pub fn from_mdp(mdp: &EpisodicMdp) -> Self {
        Self {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            horizon: mdp.horizon(),
            rewards: nest_rewards(mdp),
            transitions: nest_kernel(mdp.n_states(), mdp.n_actions(), mdp.horizon(), |h, s, a| {
                mdp.transition_row(h, s, a).to_vec()
            }),
            initial_state: mdp.initial_state(),
        }
    }
}

impl MixtureFile {
    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        serde_json::from_str(text).map_err(|e| MdpError::Json(e.to_string()))
    }

    pub fn into_mixture(self) -> Result<LinearMixtureMdp, MdpError> {
        let (n_s, n_a, horizon) = (self.n_states, self.n_actions, self.horizon);
        check_len("theta", "theta", self.d, self.theta.len())?;
        check_len("base_kernels", "base_kernels", self.d, self.base_kernels.len())?;
        let rewards = flatten_rewards(&self.rewards, n_s, n_a, horizon)?;
        let mut base = Vec::with_capacity(self.d * horizon * n_s * n_a * n_s);
        for (j, kernel) in self.base_kernels.iter().enumerate() {
            base.extend(flatten_kernel(
                "base_kernels",
                &format!("base_kernels[{j}]"),
                kernel,
                n_s,
                n_a,
                horizon,
            )?);
        }
        let mixture = LinearMixtureMdp::new(
            n_s,
            n_a,
            horizon,
            self.initial_state,
            rewards,
            base,
            self.theta,
            self.theta_bound,
        )?;
        if let Some(explicit) = &self.transitions {
            let flat = flatten_kernel("transitions", "transitions", explicit, n_s, n_a, horizon)?;
            let mixed = mixture.mdp().transitions();
            if let Some(i) = flat.iter().zip(mixed).position(|(x, y)| (x - y).abs() > 1e-10) {
                let next = i % n_s;
                let a = (i / n_s) % n_a;
                let s = (i / (n_s * n_a)) % n_s;
                let h = i / (n_s * n_a * n_s);
                return Err(MdpError::MixtureMismatch { h, s, a, next });
            }
        }
        Ok(mixture)
    }

    pub fn from_mixture(m: &LinearMixtureMdp) -> Self {
        let mdp = m.mdp();
        let (n_s, n_a, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
        Self {
            n_states: n_s,
            n_actions: n_a,
            horizon,
            rewards: nest_rewards(mdp),
            transitions: None,
            initial_state: mdp.initial_state(),
            d: m.dim(),
            theta: m.theta().to_vec(),
            base_kernels: (0..m.dim())
                .map(|j| nest_kernel(n_s, n_a, horizon, |h, s, a| m.base_row(j, h, s, a).to_vec()))
                .collect(),
            theta_bound: Some(m.theta_bound()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STATE: &str = r#"{
        "n_states": 2, "n_actions": 2, "horizon": 1, "initial_state": 0,
        "rewards": [[[0.3, 0.7], [0.0, 0.0]]],
        "transitions": [[[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]]]
    }"#;

    #[test]
    fn loads_and_round_trips() {
        let mdp = MdpFile::from_json(TWO_STATE).unwrap().into_mdp().unwrap();
        assert_eq!(mdp.reward(0, 0, 1), 0.7);
        assert_eq!(MdpFile::from_mdp(&mdp).into_mdp().unwrap(), mdp);
    }

    #[test]
    fn reports_first_violation_with_indices() {
        let bad = TWO_STATE.replace("[0.5, 0.5], [0.5, 0.5]", "[0.5, 0.5], [0.5, 0.6]");
        let err = MdpFile::from_json(&bad).unwrap().into_mdp().unwrap_err();
        assert!(
            matches!(err, MdpError::RowNotStochastic { h: 0, s: 1, a: 1, .. }),
            "{err}"
        );

        let bad = TWO_STATE.replace("[0.3, 0.7]", "[0.3, 1.7]");
        let err = MdpFile::from_json(&bad).unwrap().into_mdp().unwrap_err();
        assert_eq!(
            err,
            MdpError::RewardOutOfRange {
                h: 0,
                s: 0,
                a: 1,
                value: 1.7
            }
        );

        let bad = TWO_STATE.replace("[0.0, 0.0]]]", "[0.0]]]");
        let err = MdpFile::from_json(&bad).unwrap().into_mdp().unwrap_err();
        assert!(
            matches!(err, MdpError::Shape { ref path, .. } if path == "rewards[0][1]"),
            "{err}"
        );
    }

    #[test]
    fn stochastic_reward_fields_are_rejected() {
        let bad = TWO_STATE.replace("\"initial_state\": 0,", "\"initial_state\": 0, \"reward_noise\": 0.1,");
        assert!(matches!(MdpFile::from_json(&bad), Err(MdpError::Json(_))));
    }
}
