//! Independent ground truth: exhaustive policy evaluation, greedy eluder
//! sequences and confidence-set sandwich checks.

mod eluder;
mod policies;
mod sandwich;

pub use eluder::{eluder_dimension_estimate, verify_certificate, EluderEstimate, INDEPENDENCE_TOL};
pub use policies::{
    brute_force_optimal_value, brute_force_policy_values, for_each_policy_value, PolicyValues, DEFAULT_POLICY_BUDGET,
};
pub use sandwich::{sandwich_check, SandwichBound, SandwichReport, Violation, ViolationKind, SANDWICH_FACTOR};

use thiserror::Error;

use crate::function_class::ClassError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration needs {needed} elements, over the budget of {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error(transparent)]
    Class(#[from] ClassError),
}
