//! Brute-force widths and sensitivities for cross-checking the exact
//! solvers. Deliberately naive: constraints are evaluated by summing over
//! dataset entries, and the optimisation is a grid sweep.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::{ClassError, ConfidenceParams, Covariate, FunctionClass, LinearClass, SubsampledDataset};

/// Largest linear dimension the direction sweep supports.
pub const ORACLE_MAX_DIM: usize = 3;

const TABULAR_GRID: usize = 1000;
const ANGLES_2D: usize = 2000;
const GRID_3D: usize = 200;
const ZOOM_ROUNDS: usize = 4;
const ZOOM_POINTS: usize = 60;
const RADIUS_GRID: usize = 64;
const BISECTIONS: usize = 80;

pub fn brute_force_width(
    class: &FunctionClass,
    data: &SubsampledDataset,
    params: &ConfidenceParams,
    query: &Covariate,
) -> Result<f64, ClassError> {
    check_beta(params)?;
    match class {
        FunctionClass::Tabular(t) => {
            t.cell(query)?;
            let mut best: f64 = 0.0;
            for k in 0..=TABULAR_GRID {
                let delta = t.range * k as f64 / TABULAR_GRID as f64;
                let norm = data.sq_norm(|z| if z == query { delta } else { 0.0 });
                if norm.min(params.cap) <= params.beta {
                    best = best.max(delta);
                }
            }
            Ok(best)
        }
        FunctionClass::Linear(l) => {
            let (phis, phi_q) = linear_inputs(l, data, query)?;
            let objective = |u: &DVector<f64>| {
                let t = max_radius(l.bound, params, |t| data_norm(&phis, u, t));
                t * u.dot(&phi_q).abs()
            };
            sweep_sphere(l.dim, objective)
        }
    }
}

pub fn brute_force_sensitivity(
    class: &FunctionClass,
    data: &SubsampledDataset,
    params: &ConfidenceParams,
    z: &Covariate,
) -> Result<f64, ClassError> {
    check_beta(params)?;
    let score = match class {
        FunctionClass::Tabular(t) => {
            t.cell(z)?;
            let mut best: f64 = 0.0;
            for k in 1..=TABULAR_GRID {
                let delta = t.range * k as f64 / TABULAR_GRID as f64;
                let norm = data.sq_norm(|x| if x == z { delta } else { 0.0 });
                best = best.max(delta * delta / (norm.min(params.cap) + params.beta));
            }
            best
        }
        FunctionClass::Linear(l) => {
            let (phis, phi_z) = linear_inputs(l, data, z)?;
            let objective = |u: &DVector<f64>| {
                let align = u.dot(&phi_z);
                let mut best: f64 = 0.0;
                for k in 1..=RADIUS_GRID {
                    let t = 2.0 * l.bound * k as f64 / RADIUS_GRID as f64;
                    let denom = data_norm(&phis, u, t).min(params.cap) + params.beta;
                    best = best.max((t * align).powi(2) / denom);
                }
                best
            };
            sweep_sphere(l.dim, objective)?
        }
    };
    Ok(score.min(1.0))
}

fn check_beta(params: &ConfidenceParams) -> Result<(), ClassError> {
    if params.beta > 0.0 {
        Ok(())
    } else {
        Err(ClassError::InvalidBeta(params.beta))
    }
}

type Weighted = Vec<(DVector<f64>, f64)>;

fn linear_inputs(
    l: &LinearClass,
    data: &SubsampledDataset,
    q: &Covariate,
) -> Result<(Weighted, DVector<f64>), ClassError> {
    if l.dim > ORACLE_MAX_DIM || l.dim == 0 {
        return Err(ClassError::Unsupported(format!(
            "brute-force sweep supports 1 ≤ d ≤ {ORACLE_MAX_DIM}, got {}",
            l.dim
        )));
    }
    let phis = data
        .iter()
        .map(|(z, m)| l.feature(z).map(|p| (p, m as f64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((phis, l.feature(q)?))
}

/// `Σ m_z ((t·u)ᵀφ(z))²`
fn data_norm(phis: &Weighted, u: &DVector<f64>, t: f64) -> f64 {
    phis.iter().map(|(p, m)| m * (t * u.dot(p)).powi(2)).sum()
}

/// Largest `t ∈ [0, 2B]` with `min(norm(t), cap) ≤ β`, by bisection.
fn max_radius(bound: f64, params: &ConfidenceParams, norm: impl Fn(f64) -> f64) -> f64 {
    let ok = |t: f64| norm(t).min(params.cap) <= params.beta;
    let hi_limit = 2.0 * bound;
    if ok(hi_limit) {
        return hi_limit;
    }
    let (mut lo, mut hi) = (0.0, hi_limit);
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maximises `f` over unit vectors (the objectives are even in `u`, so half
/// the sphere suffices), with local zoom refinement around the best cell.
fn sweep_sphere(dim: usize, f: impl Fn(&DVector<f64>) -> f64) -> Result<f64, ClassError> {
    match dim {
        1 => Ok(f(&DVector::from_vec(vec![1.0]))),
        2 => {
            let at = |a: f64| f(&DVector::from_vec(vec![a.cos(), a.sin()]));
            let mut step = PI / ANGLES_2D as f64;
            let (mut best_a, mut best) = (0.0, f64::NEG_INFINITY);
            for k in 0..ANGLES_2D {
                let a = k as f64 * step;
                let v = at(a);
                if v > best {
                    best = v;
                    best_a = a;
                }
            }
            for _ in 0..ZOOM_ROUNDS {
                let centre = best_a;
                let span = 2.0 * step;
                for k in 0..=ZOOM_POINTS {
                    let a = centre - span / 2.0 + span * k as f64 / ZOOM_POINTS as f64;
                    let v = at(a);
                    if v > best {
                        best = v;
                        best_a = a;
                    }
                }
                step = span / ZOOM_POINTS as f64;
            }
            Ok(best)
        }
        3 => {
            let at = |polar: f64, azim: f64| {
                f(&DVector::from_vec(vec![
                    polar.sin() * azim.cos(),
                    polar.sin() * azim.sin(),
                    polar.cos(),
                ]))
            };
            let mut dp = (PI / 2.0) / GRID_3D as f64;
            let mut da = 2.0 * PI / GRID_3D as f64;
            let (mut bp, mut ba, mut best) = (0.0, 0.0, f64::NEG_INFINITY);
            for i in 0..=GRID_3D {
                for j in 0..GRID_3D {
                    let (p, a) = (i as f64 * dp, j as f64 * da);
                    let v = at(p, a);
                    if v > best {
                        best = v;
                        bp = p;
                        ba = a;
                    }
                }
            }
            let n = ZOOM_POINTS / 2;
            for _ in 0..ZOOM_ROUNDS {
                let (cp, ca) = (bp, ba);
                let (sp, sa) = (2.0 * dp, 2.0 * da);
                for i in 0..=n {
                    for j in 0..=n {
                        let p = cp - sp / 2.0 + sp * i as f64 / n as f64;
                        let a = ca - sa / 2.0 + sa * j as f64 / n as f64;
                        let v = at(p, a);
                        if v > best {
                            best = v;
                            bp = p;
                            ba = a;
                        }
                    }
                }
                dp = sp / n as f64;
                da = sa / n as f64;
            }
            Ok(best)
        }
        _ => Err(ClassError::Unsupported(format!("dimension {dim}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64) -> ConfidenceParams {
        ConfidenceParams::new(beta, 1e12, 0.1).unwrap()
    }

    #[test]
    fn tabular_grid_recovers_closed_form() {
        let class = FunctionClass::tabular(2, 1, 2.0);
        let z = Covariate::model_free(0, 0);
        let mut d = SubsampledDataset::new();
        d.insert(z.clone(), 4);
        let w = brute_force_width(&class, &d, &params(1.0), &z).unwrap();
        assert!((w - 0.5).abs() <= 2e-3);
    }

    #[test]
    fn linear_sweep_recovers_closed_form() {
        let class = FunctionClass::Linear(LinearClass::from_table(2, 1, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1e6));
        let mut d = SubsampledDataset::new();
        d.insert(Covariate::model_free(0, 0), 4);
        d.insert(Covariate::model_free(1, 0), 1);
        let w = brute_force_width(&class, &d, &params(1.0), &Covariate::model_free(0, 0)).unwrap();
        assert!((w - 0.5).abs() < 1e-6, "{w}");
    }

    #[test]
    fn rejects_large_dimension() {
        let class = FunctionClass::Linear(LinearClass::from_table(1, 1, vec![vec![1.0; 4]], 1.0));
        let r = brute_force_width(
            &class,
            &SubsampledDataset::new(),
            &params(1.0),
            &Covariate::model_free(0, 0),
        );
        assert!(matches!(r, Err(ClassError::Unsupported(_))));
    }
}
