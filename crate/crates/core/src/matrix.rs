//! Dense real matrix utilities shared by every other module.
//!
//! All positive (semi)definiteness decisions go through a single relative
//! tolerance, [`TOL_PD`], scaled by the largest eigenvalue magnitude of the
//! operands involved.

use std::f64::consts::PI;
use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// General real matrix (channel matrices, genie correlations).
pub type GenMatrix = DMatrix<f64>;

/// Relative tolerance for every PD/PSD decision.
pub const TOL_PD: f64 = 1e-9;

/// Default absolute accuracy of [`numerical_radius`].
pub const RADIUS_TOL: f64 = 1e-10;

const THETA_GRID: usize = 64;

/// Real symmetric matrix. Entries are symmetrized on construction so that
/// `a[(i, j)] == a[(j, i)]` holds bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                actual: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes `(m + mᵀ) / 2` without validation. `m` must be square.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymMatrix(out)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        SymMatrix(DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }))
    }

    /// `c · I`
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymMatrix(DMatrix::identity(n, n) * c)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.0.clone())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMatrix(&self.0 * c)
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        SymMatrix::symmetrize(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        SymMatrix::symmetrize(&self.0 - &other.0)
    }

    /// `C · self · Cᵀ`
    pub fn congruence(&self, c: &GenMatrix) -> Self {
        SymMatrix::symmetrize(c * &self.0 * c.transpose())
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// Reassembles `V diag(λ) Vᵀ`.
    pub fn from_eigen(vectors: &DMatrix<f64>, values: &[f64]) -> Self {
        let n = values.len();
        let mut scaled = vectors.clone();
        for (j, &lam) in values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= lam;
            }
        }
        SymMatrix::symmetrize(scaled * vectors.transpose())
    }

    /// Applies `f` to each eigenvalue.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = self.eigen();
        let vals: Vec<f64> = eig.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_eigen(&eig.eigenvectors, &vals)
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<DMatrix<f64>> for SymMatrix {
    type Error = Error;
    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        SymMatrix::new(m)
    }
}

impl From<SymMatrix> for DMatrix<f64> {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("symmetric matrix rows must form a square".into()));
        }
        SymMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(s: SymMatrix) -> Self {
        s.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Result of comparing two symmetric matrices in the Loewner order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderLabel {
    /// `A ⪰ B`
    Succeq,
    /// `A ≺ B`
    Prec,
    Incomparable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdOrdering {
    pub label: OrderLabel,
    /// Smallest eigenvalue of `A − B`.
    pub min_eig_diff: f64,
    /// Largest eigenvalue of `A − B`.
    pub max_eig_diff: f64,
}

impl PsdOrdering {
    pub fn succeq(&self) -> bool {
        self.label == OrderLabel::Succeq
    }

    pub fn prec(&self) -> bool {
        self.label == OrderLabel::Prec
    }
}

/// Absolute tolerance for a PSD decision on matrices of magnitude `scale`.
pub fn pd_tolerance(scale: f64) -> f64 {
    TOL_PD * scale.abs()
}

fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", a.dim()),
            actual: format!("{0}x{0}", b.dim()),
        });
    }
    Ok(())
}

/// Natural log of the determinant of a symmetric positive definite matrix.
pub fn logdet_pd(a: &SymMatrix) -> Result<f64> {
    let ev = a.eigenvalues();
    let min = ev[0];
    let scale = ev[0].abs().max(ev[ev.len() - 1].abs());
    if min <= pd_tolerance(scale) {
        return Err(Error::NotPositiveDefinite { min_eig: min });
    }
    Ok(ev.iter().map(|l| l.ln()).sum())
}

/// Loewner comparison of `a` and `b`: `succeq` iff `λ_min(a − b) ≥ −tol`,
/// `prec` iff `λ_max(a − b) < −tol`, otherwise `incomparable`.
pub fn psd_order(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<PsdOrdering> {
    check_same_dim(a, b)?;
    let ev = a.sub(b).eigenvalues();
    let min = ev[0];
    let max = ev[ev.len() - 1];
    let label = if min >= -tol {
        OrderLabel::Succeq
    } else if max < -tol {
        OrderLabel::Prec
    } else {
        OrderLabel::Incomparable
    };
    Ok(PsdOrdering { label, min_eig_diff: min, max_eig_diff: max })
}

/// [`psd_order`] with the tolerance scaled to the operands' magnitude.
pub fn psd_order_relative(a: &SymMatrix, b: &SymMatrix) -> Result<PsdOrdering> {
    check_same_dim(a, b)?;
    let scale = a.spectral_radius().max(b.spectral_radius()).max(1.0);
    psd_order(a, b, pd_tolerance(scale))
}

fn require_square(b: &GenMatrix) -> Result<()> {
    if b.nrows() != b.ncols() || b.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: "non-empty square matrix".into(),
            actual: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    Ok(())
}

/// Spectral radius of the Hermitian matrix `cos θ · K + i sin θ · J`
/// where `K` is symmetric and `J` skew-symmetric.
fn hermitian_radius(k: &DMatrix<f64>, j: &DMatrix<f64>, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let n = k.nrows();
    if n == 2 {
        let p = c * k[(0, 0)];
        let r = c * k[(1, 1)];
        let re = c * k[(0, 1)];
        let im = s * j[(0, 1)];
        let mid = 0.5 * (p + r);
        let rad = (0.25 * (p - r) * (p - r) + re * re + im * im).sqrt();
        return (mid + rad).abs().max((mid - rad).abs());
    }
    // Real embedding [[X, −Y], [Y, X]] of X + iY repeats each eigenvalue twice.
    let mut emb = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let x = c * k[(a, b)];
            let y = s * j[(a, b)];
            emb[(a, b)] = x;
            emb[(a + n, b + n)] = x;
            emb[(a, b + n)] = -y;
            emb[(a + n, b)] = y;
        }
    }
    emb.symmetric_eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = f1.max(f2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// Numerical radius `max_{‖α‖=1, α ∈ ℂⁿ} |α^H B α|` of a real square matrix.
///
/// Uses `r(B) = max_θ ρ((e^{iθ}B + e^{−iθ}Bᵀ)/2)` over `θ ∈ [0, π)`: a
/// 64-point grid followed by golden-section refinement (to `tol` in θ)
/// around every local maximum of the grid.
pub fn numerical_radius(b: &GenMatrix, tol: f64) -> Result<f64> {
    require_square(b)?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = b.nrows();
    if n == 1 {
        return Ok(b[(0, 0)].abs());
    }
    let bt = b.transpose();
    let k = (b + &bt) * 0.5;
    let j = (b - &bt) * 0.5;
    if j.iter().all(|v| *v == 0.0) {
        return Ok(SymMatrix::symmetrize(k).spectral_radius());
    }
    let h = PI / THETA_GRID as f64;
    let grid: Vec<f64> = (0..THETA_GRID).map(|i| hermitian_radius(&k, &j, i as f64 * h)).collect();
    let mut best = grid.iter().copied().fold(0.0_f64, f64::max);
    let tol = tol.max(1e-15);
    for i in 0..THETA_GRID {
        let prev = grid[(i + THETA_GRID - 1) % THETA_GRID];
        let next = grid[(i + 1) % THETA_GRID];
        if grid[i] >= prev && grid[i] >= next {
            let centre = i as f64 * h;
            let v = golden_max(|t| hermitian_radius(&k, &j, t), centre - h, centre + h, tol);
            best = best.max(v);
        }
    }
    Ok(best)
}

/// Projects `values` onto `{λ ≥ 0, Σλ ≤ budget}` in the Euclidean norm.
pub fn project_capped_simplex(values: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= budget {
        return clipped;
    }
    let mut sorted = clipped.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - budget) / (i + 1) as f64;
        if i + 1 == sorted.len() || sorted[i + 1] <= candidate {
            shift = candidate;
            break;
        }
    }
    clipped.iter().map(|v| (v - shift).max(0.0)).collect()
}

/// Frobenius projection onto `{X ⪰ 0, tr X ≤ budget}`.
pub fn project_trace_psd(s: &SymMatrix, budget: f64) -> SymMatrix {
    let budget = budget.max(0.0);
    let eig = s.eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    // Feasible up to rounding counts as feasible, which keeps the map idempotent.
    let slack = 16.0 * f64::EPSILON * s.frobenius().max(budget);
    if vals.iter().all(|&v| v >= -slack) && s.trace() <= budget + slack {
        return s.clone();
    }
    let proj = project_capped_simplex(&vals, budget);
    let mut out = SymMatrix::from_eigen(&eig.eigenvectors, &proj);
    let tr = out.trace();
    if tr > budget && tr > 0.0 {
        out = out.scale(budget / tr);
    }
    out
}

/// Schur complement test: `[[I, A], [Aᵀ, B]] ⪰ 0` iff `B ⪰ AᵀA`.
pub fn schur_psd_exists(a: &GenMatrix, b: &SymMatrix) -> Result<bool> {
    if a.ncols() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} columns", b.dim()),
            actual: format!("{} columns", a.ncols()),
        });
    }
    let ata = SymMatrix::symmetrize(a.transpose() * a);
    let scale = b.spectral_radius().max(ata.spectral_radius());
    Ok(b.sub(&ata).min_eigenvalue() >= -pd_tolerance(scale))
}

/// `M^{-1/2}` of a symmetric positive definite matrix.
pub fn inv_sqrt_pd(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = m.eigen();
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= pd_tolerance(scale) {
        return Err(Error::NotPositiveDefinite { min_eig: min });
    }
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
    Ok(SymMatrix::from_eigen(&eig.eigenvectors, &vals))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inv_pd(m: &SymMatrix) -> Result<SymMatrix> {
    match m.as_matrix().clone().cholesky() {
        Some(ch) => Ok(SymMatrix::symmetrize(ch.inverse())),
        None => Err(Error::NotPositiveDefinite { min_eig: m.min_eigenvalue() }),
    }
}

/// True when the smallest eigenvalue exceeds the relative PD tolerance.
pub fn is_pd(m: &SymMatrix) -> bool {
    let ev = m.eigenvalues();
    let scale = ev[0].abs().max(ev[ev.len() - 1].abs());
    ev[0] > pd_tolerance(scale)
}

/// Smallest and largest singular values.
pub fn singular_extremes(m: &GenMatrix) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (min, max)
}
