use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::function_class::{ConfidenceParams, Covariate, Fitted, FunctionClass, SubsampledDataset};

/// Slack factor between the inner, sub-sampled and outer confidence sets.
pub const SANDWICH_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `‖f₁ − f₂‖²_Z ≤ β/100` but `min{‖f₁ − f₂‖²_Ẑ, cap} > β`.
    Inner,
    /// `min{‖f₁ − f₂‖²_Ẑ, cap} ≤ β` but `‖f₁ − f₂‖²_Z > 100β`.
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub first: usize,
    pub second: usize,
    pub kind: ViolationKind,
    pub full_norm: f64,
    pub sub_norm: f64,
}

/// Widths of the three sets at one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichBound {
    pub query: Covariate,
    pub inner: f64,
    pub sub: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
    pub bounds: Vec<SandwichBound>,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// `inner ≤ sub ≤ outer` at every query.
    pub fn bounds_ordered(&self) -> bool {
        self.bounds
            .iter()
            .all(|b| b.inner <= b.sub + 1e-12 && b.sub <= b.outer + 1e-12)
    }
}

/// Checks the containments of the inner (`β/100`, full data), sub-sampled
/// (`β`, `Ẑ`, capped) and outer (`100β`, full data) confidence sets over
/// every pair of an explicit ε-net.
pub fn sandwich_check(
    class: &FunctionClass,
    full: &SubsampledDataset,
    sub: &SubsampledDataset,
    params: &ConfidenceParams,
    net_eps: f64,
    budget: u64,
    queries: &[Covariate],
) -> Result<SandwichReport, OracleError> {
    let net = class.cover(net_eps, budget)?;
    // Evaluate every net element once on the union of both supports.
    let support: Vec<(Covariate, f64, f64)> = {
        let mut pts: Vec<(Covariate, f64, f64)> = full.iter().map(|(z, m)| (z.clone(), m as f64, 0.0)).collect();
        for (z, m) in sub.iter() {
            match pts.iter_mut().find(|(x, _, _)| x == z) {
                Some(p) => p.2 = m as f64,
                None => pts.push((z.clone(), 0.0, m as f64)),
            }
        }
        pts
    };
    let evals: Vec<Vec<f64>> = net
        .iter()
        .map(|f: &Fitted| {
            support
                .iter()
                .map(|(z, _, _)| f.eval(class, z))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;

    let beta = params.beta;
    let mut violations = Vec::new();
    let mut checked = 0u64;
    for i in 0..net.len() {
        for j in i + 1..net.len() {
            let (mut nz, mut nh) = (0.0, 0.0);
            for (k, (_, mz, mh)) in support.iter().enumerate() {
                let d = evals[i][k] - evals[j][k];
                nz += mz * d * d;
                nh += mh * d * d;
            }
            let nh = nh.min(params.cap);
            checked += 1;
            let kind = if nz <= beta / SANDWICH_FACTOR && nh > beta {
                Some(ViolationKind::Inner)
            } else if nh <= beta && nz > SANDWICH_FACTOR * beta {
                Some(ViolationKind::Outer)
            } else {
                None
            };
            if let Some(kind) = kind {
                violations.push(Violation {
                    first: i,
                    second: j,
                    kind,
                    full_norm: nz,
                    sub_norm: nh,
                });
            }
        }
    }

    let inner_params = params.with_beta(beta / SANDWICH_FACTOR)?;
    let outer_params = params.with_beta(beta * SANDWICH_FACTOR)?;
    let bounds = queries
        .iter()
        .map(|q| {
            Ok(SandwichBound {
                query: q.clone(),
                inner: class.width(full, &inner_params, q)?,
                sub: class.width(sub, params, q)?,
                outer: class.width(full, &outer_params, q)?,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    Ok(SandwichReport {
        pairs_checked: checked,
        violations,
        bounds,
    })
}
