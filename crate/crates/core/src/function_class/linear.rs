//! Geometry of linear classes `f_θ(z) = θᵀφ(z)`, `‖θ‖₂ ≤ B`.
//!
//! Pairs `(θ₁, θ₂)` only enter through `δ = θ₁ − θ₂`, and every `δ` with
//! `‖δ‖ ≤ 2B` is realised by `(δ/2, −δ/2)`. Widths and sensitivities are
//! therefore optimisation problems over `δ` subject to the data ellipsoid
//! `δᵀΛδ ≤ β` and the ball `‖δ‖ ≤ 2B`; both are solved through their
//! one-dimensional convex duals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative ridge added to Gram matrices: `λ = RIDGE · tr(Λ) / d`.
pub const RIDGE: f64 = 1e-8;

pub fn ridge(gram: &DMatrix<f64>) -> f64 {
    RIDGE * gram.trace() / gram.nrows() as f64
}

/// `Λ + λI` with the relative ridge.
pub fn regularized(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let lambda = ridge(gram);
    let mut g = gram.clone();
    for i in 0..g.nrows() {
        g[(i, i)] += lambda;
    }
    g
}

/// `φᵀ M⁻¹ φ` for positive definite `M`; `+∞` if `M` is not PD.
pub fn inv_quad(m: &DMatrix<f64>, phi: &DVector<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(ch) => phi.dot(&ch.solve(phi)),
        None => f64::INFINITY,
    }
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `sup δᵀφ` over `δᵀGδ ≤ β`, `‖δ‖ ≤ 2B`.
///
/// Dual: `min_{α∈[0,1]} √(φᵀ(αG + (1−α)I)⁻¹φ · (αβ + (1−α)4B²))`, which is
/// quasi-convex in `α`.
pub fn ellipsoid_ball_width(gram: &DMatrix<f64>, phi: &DVector<f64>, beta: f64, bound: f64) -> f64 {
    let phi_sq = phi.norm_squared();
    if phi_sq == 0.0 {
        return 0.0;
    }
    let ball = 4.0 * bound * bound;
    let d = gram.nrows();
    let dual = |alpha: f64| {
        let mut m = gram * alpha;
        for i in 0..d {
            m[(i, i)] += 1.0 - alpha;
        }
        (inv_quad(&m, phi) * (alpha * beta + (1.0 - alpha) * ball)).sqrt()
    };
    let at_zero = dual(0.0);
    let at_one = dual(1.0);
    let (_, inner) = golden_min(dual, 0.0, 1.0, 80);
    at_zero.min(at_one).min(inner)
}

/// `λ_max` of a symmetric matrix.
fn lambda_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max (uᵀφ)²` over unit `u` with `uᵀGu ≥ c`, via the exact SDP dual
/// `min_{z≥0} λ_max(φφᵀ + z(G − cI))`. Returns `None` when no unit vector
/// satisfies the constraint.
pub fn constrained_alignment(gram: &DMatrix<f64>, phi: &DVector<f64>, c: f64) -> Option<f64> {
    let d = gram.nrows();
    let mut shifted = gram.clone();
    for i in 0..d {
        shifted[(i, i)] -= c;
    }
    if lambda_max(&shifted) < 0.0 {
        return None;
    }
    let outer = phi * phi.transpose();
    let f = |z: f64| lambda_max(&(&outer + &shifted * z));
    // Expand the bracket until the convex objective starts rising.
    let mut hi = 1.0;
    let f0 = f(0.0);
    while f(hi) < f0 && hi < 1e12 {
        hi *= 4.0;
    }
    let (_, inner) = golden_min(f, 0.0, hi, 100);
    Some(f0.min(inner))
}

/// `sup_{‖δ‖≤2B} (δᵀφ)² / (min{δᵀGδ, cap} + β)`.
///
/// Along each direction the ratio increases with the radius, so the sup is
/// on the sphere `‖δ‖ = 2B`. Where the cap is inactive the ratio is the
/// regularised leverage `φᵀ(G + β/(4B²) I)⁻¹φ`; where it is active the
/// ratio is `4B²(uᵀφ)²/(cap + β)`.
pub fn capped_leverage(gram: &DMatrix<f64>, phi: &DVector<f64>, beta: f64, cap: f64, bound: f64) -> f64 {
    if phi.norm_squared() == 0.0 {
        return 0.0;
    }
    let ball = 4.0 * bound * bound;
    let mut reg = gram.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += beta / ball;
    }
    let uncapped = inv_quad(&reg, phi);
    let capped = constrained_alignment(gram, phi, cap / ball)
        .map(|m| ball * m / (cap + beta))
        .unwrap_or(0.0);
    uncapped.max(capped)
}

/// Solves `(A + λI) θ = b` with the relative ridge; zero when `A = 0`.
pub fn ridge_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.trace() <= 0.0 {
        return DVector::zeros(b.len());
    }
    let reg = regularized(a);
    match reg.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => reg
            .pseudo_inverse(1e-14)
            .map(|p| p * b)
            .unwrap_or_else(|_| DVector::zeros(b.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_matches_ellipsoid_when_ball_is_loose() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let phi = DVector::from_vec(vec![1.0, 0.0]);
        let w = ellipsoid_ball_width(&g, &phi, 1.0, 1e6);
        assert!((w - 0.5).abs() < 1e-9, "{w}");
    }

    #[test]
    fn width_matches_ball_when_data_is_empty() {
        let g = DMatrix::zeros(2, 2);
        let phi = DVector::from_vec(vec![3.0, 4.0]);
        let w = ellipsoid_ball_width(&g, &phi, 1.0, 0.5);
        assert!((w - 5.0).abs() < 1e-9, "{w}");
    }

    #[test]
    fn alignment_with_unconstrained_direction() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let phi = DVector::from_vec(vec![1.0, 1.0]);
        // φ̂ᵀGφ̂ = 1.25 ≥ 1: the constraint does not bind.
        let m = constrained_alignment(&g, &phi, 1.0).unwrap();
        assert!((m - 2.0).abs() < 1e-9);
        assert!(constrained_alignment(&g, &phi, 3.0).is_none());
    }
}
