use serde::{Deserialize, Serialize};

use crate::function_class::FunctionClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSchedule {
    /// Closed-form schedule with absolute constant `constant`.
    Theory {
        constant: f64,
    },
    Fixed {
        value: f64,
    },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Theory { constant: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    ModelFree,
    ModelBased,
}

/// Model-free schedule:
/// `C·H²·log(T·N(F,δ/T²)/δ)·dim_E(F,1/T)·log²T·log(|S||A|·T/δ)`.
pub fn theory_beta_model_free(
    constant: f64,
    horizon: usize,
    total_steps: u64,
    delta: f64,
    log_cover: f64,
    eluder_dim: f64,
    n_pairs: usize,
) -> f64 {
    let h = horizon as f64;
    let t = total_steps as f64;
    let log_t = t.ln();
    constant
        * h
        * h
        * (log_t + log_cover + (1.0 / delta).ln())
        * eluder_dim
        * log_t
        * log_t
        * (n_pairs as f64 * t / delta).ln()
}

/// Model-based schedule:
/// `4H²·log(2N(F,1/T)/δ) + (4/H)(C + √(H²/4·log(T/δ)))`.
pub fn theory_beta_model_based(constant: f64, horizon: usize, total_steps: u64, delta: f64, log_cover: f64) -> f64 {
    let h = horizon as f64;
    let t = total_steps as f64;
    4.0 * h * h * (2f64.ln() + log_cover + (1.0 / delta).ln())
        + (4.0 / h) * (constant + (h * h / 4.0 * (t / delta).ln()).sqrt())
}

/// Analytic upper bound on `dim_E(F, ε)`: `|S||A|` for tables and
/// `d·(1 + log(1 + 2BΦ/ε))` for linear classes.
pub fn eluder_dim_bound(class: &FunctionClass, eps: f64) -> f64 {
    match class {
        FunctionClass::Tabular(t) => t.cells() as f64,
        FunctionClass::Linear(l) => l.dim as f64 * (1.0 + (1.0 + 2.0 * l.bound * l.feature_bound / eps).ln()),
    }
}

/// `β` for a run of `T = K·H` steps.
pub fn compute_beta(
    schedule: &BetaSchedule,
    kind: EstimatorKind,
    class: &FunctionClass,
    horizon: usize,
    total_steps: u64,
    delta: f64,
    n_pairs: usize,
) -> f64 {
    match *schedule {
        BetaSchedule::Fixed { value } => value,
        BetaSchedule::Theory { constant } => {
            let t = total_steps as f64;
            match kind {
                EstimatorKind::ModelFree => theory_beta_model_free(
                    constant,
                    horizon,
                    total_steps,
                    delta,
                    class.log_cover_size(delta / (t * t)),
                    eluder_dim_bound(class, 1.0 / t),
                    n_pairs,
                ),
                EstimatorKind::ModelBased => {
                    theory_beta_model_based(constant, horizon, total_steps, delta, class.log_cover_size(1.0 / t))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_is_passthrough() {
        let class = FunctionClass::tabular(2, 2, 2.0);
        let b = compute_beta(
            &BetaSchedule::Fixed { value: 2.5 },
            EstimatorKind::ModelFree,
            &class,
            1,
            10,
            0.1,
            4,
        );
        assert_eq!(b, 2.5);
    }

    #[test]
    fn model_based_reference_value() {
        let b = theory_beta_model_based(1.0, 2, 64, 0.1, 3.0);
        assert!((b - 103.015_600_001_162_8).abs() < 1e-9, "{b}");
    }

    #[test]
    fn theory_grows_with_t() {
        let class = FunctionClass::tabular(3, 2, 4.0);
        for kind in [EstimatorKind::ModelFree, EstimatorKind::ModelBased] {
            let s = BetaSchedule::Theory { constant: 1.0 };
            let mut prev = 0.0;
            for t in [16, 32, 64, 128, 1024] {
                let b = compute_beta(&s, kind, &class, 3, t, 0.1, 6);
                assert!(b >= prev);
                prev = b;
            }
        }
    }
}
