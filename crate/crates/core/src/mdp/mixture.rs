use super::{EpisodicMdp, MdpError};

/// Tolerance on the `‖φ_V‖₂ ≤ √H` feature bound.
const FEATURE_NORM_SLACK: f64 = 1e-9;

/// A linear mixture MDP: `P_h(s'|s,a) = ⟨φ_h(s'|s,a), θ*⟩` over `d` known
/// base kernels (signed measures), with the mixed kernel exposed as an
/// ordinary [`EpisodicMdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMixtureMdp {
    dim: usize,
    /// `base[(((j * H + h) * S + s) * A + a) * S + next]`
    base: Vec<f64>,
    theta: Vec<f64>,
    theta_bound: f64,
    mixed: EpisodicMdp,
}

impl LinearMixtureMdp {
    /// Mixes the base kernels with `theta` and validates the result.
    ///
    /// `theta_bound` defaults to `‖θ‖₂` when `None`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        initial_state: usize,
        rewards: Vec<f64>,
        base_kernels: Vec<f64>,
        theta: Vec<f64>,
        theta_bound: Option<f64>,
    ) -> Result<Self, MdpError> {
        let dim = theta.len();
        let per_kernel = horizon * n_states * n_actions * n_states;
        if dim == 0 || base_kernels.len() != dim * per_kernel {
            return Err(MdpError::Shape {
                field: "base_kernels",
                path: "(flat)".into(),
                expected: dim.max(1) * per_kernel,
                found: base_kernels.len(),
            });
        }
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        let bound = theta_bound.unwrap_or(norm);
        if norm > bound * (1.0 + 1e-12) {
            return Err(MdpError::ThetaNorm { norm, bound });
        }
        let mut mixed = vec![0.0; per_kernel];
        for (j, &t) in theta.iter().enumerate() {
            for (m, b) in mixed
                .iter_mut()
                .zip(&base_kernels[j * per_kernel..(j + 1) * per_kernel])
            {
                *m += t * b;
            }
        }
        let mixed = EpisodicMdp::new(n_states, n_actions, horizon, initial_state, rewards, mixed)?;
        let out = Self {
            dim,
            base: base_kernels,
            theta,
            theta_bound: bound,
            mixed,
        };
        out.check_feature_norms()?;
        Ok(out)
    }

    fn check_feature_norms(&self) -> Result<(), MdpError> {
        let h_max = self.mixed.horizon() as f64;
        let limit = h_max.sqrt();
        for h in 0..self.mixed.horizon() {
            for s in 0..self.mixed.n_states() {
                for a in 0..self.mixed.n_actions() {
                    let norm = self.max_feature_norm(h, s, a);
                    if norm > limit * (1.0 + FEATURE_NORM_SLACK) {
                        return Err(MdpError::FeatureNorm { h, s, a, norm, limit });
                    }
                }
            }
        }
        Ok(())
    }

    /// `max_{V ∈ [0,H]^S} ‖φ_V(s,a)‖₂`. The norm is convex in `V`, so the
    /// maximum sits at a vertex of the box; vertices are enumerated for up to
    /// 16 states, beyond that a triangle-inequality bound is returned.
    pub fn max_feature_norm(&self, h: usize, s: usize, a: usize) -> f64 {
        let n_s = self.mixed.n_states();
        let big = self.mixed.horizon() as f64;
        if n_s <= 16 {
            let mut best: f64 = 0.0;
            let mut v = vec![0.0; n_s];
            for mask in 0u32..(1u32 << n_s) {
                for (i, x) in v.iter_mut().enumerate() {
                    *x = if mask >> i & 1 == 1 { big } else { 0.0 };
                }
                let phi = self.features(h, s, a, &v);
                best = best.max(phi.iter().map(|x| x * x).sum::<f64>().sqrt());
            }
            best
        } else {
            (0..self.dim)
                .map(|j| {
                    let l1: f64 = self.base_row(j, h, s, a).iter().map(|p| p.abs()).sum();
                    (big * l1).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `C_θ`
    pub fn theta_bound(&self) -> f64 {
        self.theta_bound
    }

    /// The mixed kernel as a plain episodic MDP.
    pub fn mdp(&self) -> &EpisodicMdp {
        &self.mixed
    }

    pub fn base_kernels(&self) -> &[f64] {
        &self.base
    }

    #[inline]
    pub fn base_row(&self, j: usize, h: usize, s: usize, a: usize) -> &[f64] {
        let (n_s, n_a, hor) = (self.mixed.n_states(), self.mixed.n_actions(), self.mixed.horizon());
        let start = ((((j * hor + h) * n_s + s) * n_a) + a) * n_s;
        &self.base[start..start + n_s]
    }

    /// `φ_V(s,a) = (⟨φ_j(·|s,a), V⟩)_j` at step `h`.
    pub fn features(&self, h: usize, s: usize, a: usize, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.base_row(j, h, s, a).iter().zip(v).map(|(p, x)| p * x).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_kernel_is_validated() {
        // d = 2, one state, one action, H = 1: base kernels [2] and [0] with
        // θ = (0.5, 0.5) mix to [1].
        let m = LinearMixtureMdp::new(1, 1, 1, 0, vec![0.0], vec![2.0, 0.0], vec![0.5, 0.5], None);
        // ‖φ_V‖ = ‖(2H, 0)‖ = 2 > √1 -> rejected.
        assert!(matches!(m, Err(MdpError::FeatureNorm { .. })));
        let bad = LinearMixtureMdp::new(1, 1, 1, 0, vec![0.0], vec![1.0, 1.0], vec![0.7, 0.7], Some(2.0));
        assert!(matches!(bad, Err(MdpError::ProbabilityOutOfRange { .. })));
    }
}
