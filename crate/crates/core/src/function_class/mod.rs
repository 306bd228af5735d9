//! Hypothesis classes with least-squares fitting, confidence widths,
//! sensitivity scores and covers.

mod brute_force;
mod dataset;
pub mod linear;

pub use brute_force::{brute_force_sensitivity, brute_force_width, ORACLE_MAX_DIM};
pub use dataset::{Covariate, RegressionDataset, SubsampledDataset};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::mdp::LinearMixtureMdp;

/// Default ceiling on explicitly enumerated nets.
pub const DEFAULT_COVER_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassError {
    #[error("β must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("ε must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("enumeration needs {needed} elements, over the budget of {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error("covariate kind does not match the function class")]
    CovariateMismatch,
    #[error("confidence parameters invalid: {0}")]
    InvalidParams(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// `β`, the truncation cap `T(H+1)²`, and the failure probability `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams {
    pub beta: f64,
    pub cap: f64,
    pub delta: f64,
}

impl ConfidenceParams {
    pub fn new(beta: f64, cap: f64, delta: f64) -> Result<Self, ClassError> {
        if !(beta > 0.0) {
            return Err(ClassError::InvalidBeta(beta));
        }
        if !(cap > 0.0) {
            return Err(ClassError::InvalidParams(format!("cap must be positive, got {cap}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ClassError::InvalidParams(format!("δ must lie in (0,1), got {delta}")));
        }
        Ok(Self { beta, cap, delta })
    }

    /// Parameters for a `K`-episode run: `cap = T(H+1)²` with `T = K·H`.
    pub fn for_run(beta: f64, episodes: usize, horizon: usize, delta: f64) -> Result<Self, ClassError> {
        let t = (episodes * horizon) as f64;
        Self::new(beta, t * (horizon as f64 + 1.0).powi(2), delta)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self, ClassError> {
        Self::new(beta, self.cap, self.delta)
    }
}

/// All tables `S × A → [0, range]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularClass {
    pub n_states: usize,
    pub n_actions: usize,
    pub range: f64,
}

impl TabularClass {
    pub fn cells(&self) -> usize {
        self.n_states * self.n_actions
    }

    fn cell(&self, z: &Covariate) -> Result<usize, ClassError> {
        match z {
            Covariate::ModelFree { state, action } if *state < self.n_states && *action < self.n_actions => {
                Ok(state * self.n_actions + action)
            }
            _ => Err(ClassError::CovariateMismatch),
        }
    }
}

/// Where a linear class reads its features from.
#[derive(Debug, Clone)]
pub enum FeatureMap {
    /// `φ(s,a)` from a table, row-major over `(s, a)`.
    Table {
        n_states: usize,
        n_actions: usize,
        features: Vec<Vec<f64>>,
    },
    /// `φ_V(s,a)` at step `step` of a linear mixture MDP.
    Mixture {
        mixture: Arc<LinearMixtureMdp>,
        step: usize,
    },
}

/// `{θᵀφ(z) : ‖θ‖₂ ≤ bound}`.
#[derive(Debug, Clone)]
pub struct LinearClass {
    pub dim: usize,
    pub features: FeatureMap,
    pub bound: f64,
    /// `Φ_max`, a bound on `‖φ(z)‖₂` over the covariate space.
    pub feature_bound: f64,
}

impl LinearClass {
    pub fn from_table(n_states: usize, n_actions: usize, features: Vec<Vec<f64>>, bound: f64) -> Self {
        assert_eq!(features.len(), n_states * n_actions, "feature table shape");
        let dim = features.first().map_or(0, Vec::len);
        assert!(features.iter().all(|f| f.len() == dim), "ragged feature table");
        let feature_bound = features
            .iter()
            .map(|f| f.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Self {
            dim,
            features: FeatureMap::Table {
                n_states,
                n_actions,
                features,
            },
            bound,
            feature_bound,
        }
    }

    /// The induced class `f_θ(s,a,V) = θᵀφ_V(s,a)` at step `step`.
    pub fn mixture_induced(mixture: Arc<LinearMixtureMdp>, step: usize) -> Self {
        Self {
            dim: mixture.dim(),
            bound: mixture.theta_bound(),
            feature_bound: (mixture.mdp().horizon() as f64).sqrt(),
            features: FeatureMap::Mixture { mixture, step },
        }
    }

    pub fn feature(&self, z: &Covariate) -> Result<DVector<f64>, ClassError> {
        match (&self.features, z) {
            (
                FeatureMap::Table {
                    n_states,
                    n_actions,
                    features,
                },
                Covariate::ModelFree { state, action },
            ) if state < n_states && action < n_actions => {
                Ok(DVector::from_column_slice(&features[state * n_actions + action]))
            }
            (FeatureMap::Mixture { mixture, step }, Covariate::ModelBased { state, action, value })
                if *state < mixture.mdp().n_states()
                    && *action < mixture.mdp().n_actions()
                    && value.len() == mixture.mdp().n_states() =>
            {
                Ok(DVector::from_vec(mixture.features(*step, *state, *action, value)))
            }
            _ => Err(ClassError::CovariateMismatch),
        }
    }

    /// `Λ = Σ m_z φ(z)φ(z)ᵀ` (no ridge).
    pub fn gram(&self, data: &SubsampledDataset) -> Result<DMatrix<f64>, ClassError> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for (z, m) in data.iter() {
            let phi = self.feature(z)?;
            g.ger(m as f64, &phi, &phi, 1.0);
        }
        Ok(g)
    }

    /// Width at `query` given a precomputed Gram matrix.
    pub fn width_with_gram(
        &self,
        gram: &DMatrix<f64>,
        params: &ConfidenceParams,
        query: &Covariate,
    ) -> Result<f64, ClassError> {
        let phi = self.feature(query)?;
        if params.beta >= params.cap {
            return Ok(2.0 * self.bound * phi.norm());
        }
        let reg = linear::regularized(gram);
        Ok(linear::ellipsoid_ball_width(&reg, &phi, params.beta, self.bound))
    }

    pub fn sensitivity_with_gram(
        &self,
        gram: &DMatrix<f64>,
        params: &ConfidenceParams,
        z: &Covariate,
    ) -> Result<f64, ClassError> {
        let phi = self.feature(z)?;
        let reg = linear::regularized(gram);
        Ok(linear::capped_leverage(&reg, &phi, params.beta, params.cap, self.bound).min(1.0))
    }
}

#[derive(Debug, Clone)]
pub enum FunctionClass {
    Tabular(TabularClass),
    Linear(LinearClass),
}

/// A fitted class member.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Table { n_actions: usize, values: Vec<f64> },
    Linear { theta: DVector<f64> },
}

impl Fitted {
    pub fn eval(&self, class: &FunctionClass, z: &Covariate) -> Result<f64, ClassError> {
        match (self, class) {
            (Fitted::Table { values, .. }, FunctionClass::Tabular(t)) => Ok(values[t.cell(z)?]),
            (Fitted::Linear { theta }, FunctionClass::Linear(l)) => Ok(theta.dot(&l.feature(z)?)),
            _ => Err(ClassError::CovariateMismatch),
        }
    }
}

impl FunctionClass {
    pub fn tabular(n_states: usize, n_actions: usize, range: f64) -> Self {
        FunctionClass::Tabular(TabularClass {
            n_states,
            n_actions,
            range,
        })
    }

    /// `sup_{f₁,f₂} |f₁(z) − f₂(z)|` with no data constraint.
    pub fn diameter_at(&self, z: &Covariate) -> Result<f64, ClassError> {
        match self {
            FunctionClass::Tabular(t) => t.cell(z).map(|_| t.range),
            FunctionClass::Linear(l) => Ok(2.0 * l.bound * l.feature(z)?.norm()),
        }
    }

    /// Least-squares fit over the class.
    ///
    /// Tabular: weighted per-cell mean clipped to `[0, range]`, unvisited
    /// cells at the range midpoint. Linear: ridge-stabilised normal equations,
    /// projected onto the parameter ball.
    pub fn fit(&self, data: &RegressionDataset) -> Result<Fitted, ClassError> {
        match self {
            FunctionClass::Tabular(t) => {
                let mut sums = vec![0.0; t.cells()];
                let mut weights = vec![0u64; t.cells()];
                for (x, y, w) in data.iter() {
                    let c = t.cell(x)?;
                    sums[c] += w as f64 * y;
                    weights[c] += w;
                }
                let values = sums
                    .iter()
                    .zip(&weights)
                    .map(|(&s, &w)| {
                        if w == 0 {
                            t.range / 2.0
                        } else {
                            (s / w as f64).clamp(0.0, t.range)
                        }
                    })
                    .collect();
                Ok(Fitted::Table {
                    n_actions: t.n_actions,
                    values,
                })
            }
            FunctionClass::Linear(l) => {
                let mut a = DMatrix::zeros(l.dim, l.dim);
                let mut b = DVector::zeros(l.dim);
                for (x, y, w) in data.iter() {
                    let phi = l.feature(x)?;
                    a.ger(w as f64, &phi, &phi, 1.0);
                    b.axpy(w as f64 * y, &phi, 1.0);
                }
                let mut theta = linear::ridge_solve(&a, &b);
                let norm = theta.norm();
                if norm > l.bound {
                    theta *= l.bound / norm;
                }
                Ok(Fitted::Linear { theta })
            }
        }
    }

    /// Confidence width `sup |f₁(q) − f₂(q)|` over pairs with
    /// `min{‖f₁ − f₂‖²_Ẑ, cap} ≤ β`.
    pub fn width(
        &self,
        data: &SubsampledDataset,
        params: &ConfidenceParams,
        query: &Covariate,
    ) -> Result<f64, ClassError> {
        if !(params.beta > 0.0) {
            return Err(ClassError::InvalidBeta(params.beta));
        }
        match self {
            FunctionClass::Tabular(t) => {
                t.cell(query)?;
                let m = data.multiplicity(query);
                if params.beta >= params.cap || m == 0 {
                    Ok(t.range)
                } else {
                    Ok(t.range.min((params.beta / m as f64).sqrt()))
                }
            }
            FunctionClass::Linear(l) => l.width_with_gram(&l.gram(data)?, params, query),
        }
    }

    /// `min{ sup (f₁(z) − f₂(z))² / (min{‖f₁ − f₂‖²_Ẑ, cap} + β), 1 }`.
    pub fn sensitivity(
        &self,
        data: &SubsampledDataset,
        params: &ConfidenceParams,
        z: &Covariate,
    ) -> Result<f64, ClassError> {
        if !(params.beta > 0.0) {
            return Err(ClassError::InvalidBeta(params.beta));
        }
        match self {
            FunctionClass::Tabular(t) => {
                t.cell(z)?;
                let r2 = t.range * t.range;
                let m = data.multiplicity(z) as f64;
                Ok((r2 / ((m * r2).min(params.cap) + params.beta)).min(1.0))
            }
            FunctionClass::Linear(l) => l.sensitivity_with_gram(&l.gram(data)?, params, z),
        }
    }

    /// Analytic bound on `log N(F, ε)`; never enumerates.
    pub fn log_cover_size(&self, eps: f64) -> f64 {
        match self {
            FunctionClass::Tabular(t) => t.cells() as f64 * (1.0 + t.range / (2.0 * eps)).ln(),
            FunctionClass::Linear(l) => l.dim as f64 * (1.0 + 2.0 * l.bound * l.feature_bound / eps).ln(),
        }
    }

    /// Explicit ε-net in sup norm.
    ///
    /// Tabular: per-cell grid with spacing at most `2ε` including both
    /// endpoints. Linear: cubic parameter grid with half-diagonal
    /// `ε / Φ_max`, points projected onto the ball.
    pub fn cover(&self, eps: f64, budget: u64) -> Result<Vec<Fitted>, ClassError> {
        if !(eps > 0.0) {
            return Err(ClassError::InvalidEpsilon(eps));
        }
        match self {
            FunctionClass::Tabular(t) => {
                let steps = (t.range / (2.0 * eps) - 1e-12).ceil().max(0.0) as usize;
                let grid: Vec<f64> = if steps == 0 {
                    vec![0.0]
                } else {
                    (0..=steps).map(|k| t.range * k as f64 / steps as f64).collect()
                };
                let needed = (grid.len() as f64).powi(t.cells() as i32);
                if needed > budget as f64 {
                    return Err(ClassError::BudgetExceeded { needed, budget });
                }
                Ok(product_grid(&grid, t.cells())
                    .into_iter()
                    .map(|values| Fitted::Table {
                        n_actions: t.n_actions,
                        values,
                    })
                    .collect())
            }
            FunctionClass::Linear(l) => {
                let d = l.dim;
                let phi_max = l.feature_bound.max(f64::MIN_POSITIVE);
                let step = 2.0 * eps / (phi_max * (d as f64).sqrt());
                let reach = l.bound + step * (d as f64).sqrt() / 2.0;
                let half = (reach / step).ceil() as i64;
                let per_axis = (2 * half + 1) as f64;
                let needed = per_axis.powi(d as i32);
                if needed > budget as f64 {
                    return Err(ClassError::BudgetExceeded { needed, budget });
                }
                let axis: Vec<f64> = (-half..=half).map(|k| k as f64 * step).collect();
                let mut out = Vec::new();
                for coords in product_grid(&axis, d) {
                    let mut theta = DVector::from_vec(coords);
                    let n = theta.norm();
                    if n > reach {
                        continue;
                    }
                    if n > l.bound {
                        theta *= l.bound / n;
                    }
                    out.push(Fitted::Linear { theta });
                }
                Ok(out)
            }
        }
    }
}

/// Free-function spelling of [`FunctionClass::fit`].
pub fn least_squares_fit(class: &FunctionClass, data: &RegressionDataset) -> Result<Fitted, ClassError> {
    class.fit(data)
}

/// The finite state-action space is its own 0-cover, so snapping to the
/// covariate net is the identity.
pub fn snap_to_net(z: &Covariate, _eps: f64) -> Covariate {
    z.clone()
}

fn product_grid(axis: &[f64], dims: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(dims)];
    for _ in 0..dims {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &x in axis {
                let mut p = prefix.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
