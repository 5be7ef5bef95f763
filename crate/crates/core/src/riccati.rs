//! Existence test and maximal-solution solver for `X + Wᵀ X⁻¹ W = M`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{inv_sqrt_pd, numerical_radius, GenMatrix, SymMatrix, RADIUS_TOL};

/// Radii within this distance of ½ are reported as boundary cases.
pub const BOUNDARY_BAND: f64 = 1e-8;

/// Relative residual required of a solution away from the boundary.
pub const SOLVE_TOL: f64 = 1e-10;

/// Relative residual accepted for boundary inputs (double root).
pub const BOUNDARY_SOLVE_TOL: f64 = 1e-6;

pub const MAX_FIXED_POINT_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solvability {
    pub solvable: bool,
    /// Numerical radius of `M^{-1/2} W M^{-1/2}`.
    pub radius: f64,
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiccatiSolution {
    pub x: SymMatrix,
    /// `‖X + WᵀX⁻¹W − M‖_F / ‖M‖_F`
    pub residual: f64,
    pub fixed_point_iterations: usize,
    pub newton_steps: usize,
    pub boundary: bool,
}

fn check_dims(m: &SymMatrix, w: &GenMatrix) -> Result<()> {
    if w.nrows() != m.dim() || w.ncols() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", m.dim()),
            actual: format!("{}x{}", w.nrows(), w.ncols()),
        });
    }
    Ok(())
}

/// Decides whether the equation has a positive definite solution:
/// `r(M^{-1/2} W M^{-1/2}) ≤ ½ + tol`.
pub fn solvable(m: &SymMatrix, w: &GenMatrix, tol: f64) -> Result<Solvability> {
    check_dims(m, w)?;
    let r = inv_sqrt_pd(m)?;
    let b = r.as_matrix() * w * r.as_matrix();
    let radius = numerical_radius(&b, RADIUS_TOL)?;
    Ok(Solvability {
        solvable: radius <= 0.5 + tol,
        radius,
        boundary: (radius - 0.5).abs() <= BOUNDARY_BAND,
    })
}

/// Absolute Frobenius residual of a candidate solution.
pub fn residual(m: &SymMatrix, w: &GenMatrix, x: &SymMatrix) -> Option<f64> {
    let xinv = x.as_matrix().clone().cholesky()?.inverse();
    let lhs = x.as_matrix() + w.transpose() * xinv * w;
    Some((lhs - m.as_matrix()).norm())
}

fn fixed_point_step(m: &SymMatrix, w: &GenMatrix, x: &SymMatrix) -> Option<SymMatrix> {
    let xinv = x.as_matrix().clone().cholesky()?.inverse();
    Some(SymMatrix::symmetrize(m.as_matrix() - w.transpose() * xinv * w))
}

/// One Newton step on `F(X) = X + WᵀX⁻¹W − M`; the derivative is the
/// Stein operator `Δ ↦ Δ − GᵀΔG` with `G = X⁻¹W`.
fn newton_step(m: &SymMatrix, w: &GenMatrix, x: &SymMatrix) -> Option<SymMatrix> {
    let n = m.dim();
    let xinv = x.as_matrix().clone().cholesky()?.inverse();
    let g = &xinv * w;
    let f = x.as_matrix() + w.transpose() * &g - m.as_matrix();
    let gt = g.transpose();
    let op = DMatrix::<f64>::identity(n * n, n * n) - gt.kronecker(&gt);
    let rhs = DVector::from_column_slice(f.as_slice()) * -1.0;
    let delta = op.lu().solve(&rhs)?;
    let delta = DMatrix::from_column_slice(n, n, delta.as_slice());
    Some(SymMatrix::symmetrize(x.as_matrix() + delta))
}

/// Maximal positive definite solution.
///
/// Runs `X ← M − WᵀX⁻¹W` from `X = M` (monotonically decreasing towards the
/// maximal solution), then polishes with Newton steps while they reduce the
/// residual and keep `X` positive definite.
pub fn solve_max(m: &SymMatrix, w: &GenMatrix) -> Result<RiccatiSolution> {
    let s = solvable(m, w, BOUNDARY_BAND)?;
    if !s.solvable {
        return Err(Error::NotSolvable { radius: s.radius });
    }
    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    let rel = |x: &SymMatrix| residual(m, w, x).map(|r| r / scale);

    let mut x = m.clone();
    let mut res = rel(&x).ok_or(Error::NotPositiveDefinite { min_eig: m.min_eigenvalue() })?;
    let mut iters = 0;
    let mut checkpoint = res;
    while res > 1e-13 && iters < MAX_FIXED_POINT_ITERS {
        let next = match fixed_point_step(m, w, &x) {
            Some(n) => n,
            None => break,
        };
        debug_assert!(next.as_matrix().clone().cholesky().is_some(), "fixed-point iterate lost definiteness");
        let next_res = match rel(&next) {
            Some(r) => r,
            None => break,
        };
        x = next;
        res = next_res;
        iters += 1;
        if iters % 500 == 0 {
            if res > 0.5 * checkpoint {
                break;
            }
            checkpoint = res;
        }
    }

    let mut newton = 0;
    while res > 1e-14 && newton < 60 {
        let cand = match newton_step(m, w, &x) {
            Some(c) => c,
            None => break,
        };
        match rel(&cand) {
            Some(r) if r < res => {
                x = cand;
                res = r;
                newton += 1;
            }
            _ => break,
        }
    }

    let target = if s.boundary { BOUNDARY_SOLVE_TOL } else { SOLVE_TOL };
    if res > target {
        return Err(Error::NoConvergence { iterations: iters + newton, residual: res });
    }
    Ok(RiccatiSolution { x, residual: res, fixed_point_iterations: iters, newton_steps: newton, boundary: s.boundary })
}
