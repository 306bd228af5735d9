//! Low-switching-cost optimistic value iteration for finite-horizon
//! episodic MDPs, with exact planning and verification oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod function_class;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod seed;
pub mod subsampler;
