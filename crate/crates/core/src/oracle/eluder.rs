use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::function_class::{
    brute_force_width, ConfidenceParams, Covariate, FunctionClass, SubsampledDataset, ORACLE_MAX_DIM,
};

/// Slack on the independence inequality `width > ε`.
pub const INDEPENDENCE_TOL: f64 = 1e-6;

/// Largest tabular class the grid oracle accepts.
const MAX_TABULAR_CELLS: usize = 12;

/// A certified ε-independent sequence; its length lower-bounds `dim_E(F, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EluderEstimate {
    pub eps: f64,
    pub sequence: Vec<Covariate>,
}

impl EluderEstimate {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

fn independence_width(
    class: &FunctionClass,
    prefix: &[Covariate],
    z: &Covariate,
    eps: f64,
) -> Result<f64, OracleError> {
    let params = ConfidenceParams {
        beta: eps * eps,
        cap: f64::INFINITY,
        delta: 0.5,
    };
    let data = SubsampledDataset::from_points(prefix.iter().cloned());
    Ok(brute_force_width(class, &data, &params, z)?)
}

/// Re-checks that element `i` is ε-independent of `sequence[..i]`.
pub fn verify_certificate(
    class: &FunctionClass,
    sequence: &[Covariate],
    i: usize,
    eps: f64,
) -> Result<bool, OracleError> {
    Ok(independence_width(class, &sequence[..i], &sequence[i], eps)? > eps + INDEPENDENCE_TOL)
}

/// Greedy single pass over `pool`: an element is appended when some pair
/// with `‖f₁ − f₂‖_prefix ≤ ε` disagrees on it by more than `ε`.
/// Dependence only becomes easier as the prefix grows, so one pass is
/// the same as repeating until no element can be added.
pub fn eluder_dimension_estimate(
    class: &FunctionClass,
    eps: f64,
    pool: &[Covariate],
    budget: u64,
) -> Result<EluderEstimate, OracleError> {
    let supported = match class {
        FunctionClass::Tabular(t) => t.cells() <= MAX_TABULAR_CELLS,
        FunctionClass::Linear(l) => l.dim <= ORACLE_MAX_DIM,
    };
    if !supported {
        return Err(OracleError::BudgetExceeded {
            needed: f64::INFINITY,
            budget,
        });
    }
    if pool.len() as u64 > budget {
        return Err(OracleError::BudgetExceeded {
            needed: pool.len() as f64,
            budget,
        });
    }
    let mut sequence = Vec::new();
    for z in pool {
        if independence_width(class, &sequence, z, eps)? > eps + INDEPENDENCE_TOL {
            sequence.push(z.clone());
        }
    }
    Ok(EluderEstimate { eps, sequence })
}
