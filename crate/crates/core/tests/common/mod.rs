#![allow(dead_code)]

use iccap_core::{ChannelPair, CovariancePair, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = nalgebra::Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_matrix(rng: &mut impl Rng, t: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |_, _| rng.gen_range(-1.0..1.0) * scale)
}

/// Random matrix with condition number below 50.
pub fn rand_invertible(rng: &mut impl Rng, t: usize) -> DMatrix<f64> {
    loop {
        let m = rand_matrix(rng, t, 1.0);
        let sv = m.singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
        if lo > 0.0 && hi / lo < 50.0 {
            return m;
        }
    }
}

pub fn rand_orthogonal(rng: &mut impl Rng, t: usize) -> DMatrix<f64> {
    rand_invertible(rng, t).qr().q()
}

/// Random PSD matrix with trace uniform in `[0, power]`.
pub fn rand_cov(rng: &mut impl Rng, t: usize, power: f64) -> SymMatrix {
    let g = rand_matrix(rng, t, 1.0);
    let s = SymMatrix::symmetrize(&g * g.transpose());
    s.scale(power * rng.gen_range(0.0..=1.0) / s.trace())
}

pub fn rand_pd(rng: &mut impl Rng, t: usize, floor: f64) -> SymMatrix {
    let g = rand_matrix(rng, t, 1.0);
    SymMatrix::symmetrize(&g * g.transpose() + DMatrix::identity(t, t) * floor)
}

/// Matrix `R` with `RᵀR = A` for PD `A`.
pub fn gram_root(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().cholesky().expect("PD gram").l().transpose()
}

/// `H2ᵀH2 ⪰ H4ᵀH4` and `H3ᵀH3 ⪰ H1ᵀH1`.
pub fn strong_channel(rng: &mut impl Rng, t: usize, p1: f64, p2: f64) -> ChannelPair {
    let h1 = rand_invertible(rng, t);
    let h4 = rand_invertible(rng, t);
    let g2 = rand_matrix(rng, t, 0.7);
    let g3 = rand_matrix(rng, t, 0.7);
    let h2 = rand_orthogonal(rng, t) * gram_root(&(h4.transpose() * &h4 + g2.transpose() * &g2));
    let h3 = rand_orthogonal(rng, t) * gram_root(&(h1.transpose() * &h1 + g3.transpose() * &g3));
    ChannelPair::new(h1, h2, h3, h4, p1, p2).unwrap()
}

/// `H2ᵀH2 ≺ H4ᵀH4` and `H3ᵀH3 ⪰ H1ᵀH1`.
pub fn mixed_channel(rng: &mut impl Rng, t: usize, p1: f64, p2: f64) -> ChannelPair {
    let h1 = rand_invertible(rng, t);
    let h4 = rand_invertible(rng, t);
    let g3 = rand_matrix(rng, t, 0.7);
    let h2 = rand_orthogonal(rng, t) * &h4 * rng.gen_range(0.2..0.8);
    let h3 = rand_orthogonal(rng, t) * gram_root(&(h1.transpose() * &h1 + g3.transpose() * &g3));
    ChannelPair::new(h1, h2, h3, h4, p1, p2).unwrap()
}

/// Channel with direct links of moderate gain and cross links scaled by
/// `cross`.
pub fn weak_channel(rng: &mut impl Rng, t: usize, cross: f64, p1: f64, p2: f64) -> ChannelPair {
    ChannelPair::new(
        rand_invertible(rng, t),
        rand_matrix(rng, t, cross),
        rand_matrix(rng, t, cross),
        rand_invertible(rng, t),
        p1,
        p2,
    )
    .unwrap()
}

pub fn rand_cov_pair(rng: &mut impl Rng, ch: &ChannelPair) -> CovariancePair {
    CovariancePair::new(rand_cov(rng, ch.dim(), ch.p1()), rand_cov(rng, ch.dim(), ch.p2()))
}

/// Symmetric basis `e_i e_iᵀ` and `e_i e_jᵀ + e_j e_iᵀ`.
pub fn sym_basis(t: usize) -> Vec<SymMatrix> {
    let mut out = Vec::new();
    for i in 0..t {
        for j in i..t {
            let mut e = DMatrix::zeros(t, t);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(SymMatrix::symmetrize(e));
        }
    }
    out
}

/// Determinant as the product of the roots of the characteristic polynomial
/// (Faddeev–LeVerrier coefficients, Durand–Kerner roots).
pub fn det_via_charpoly(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let eye = DMatrix::<f64>::identity(n, n);
    let mut c_prev = 1.0;
    for k in 1..=n {
        m = a * &m + &eye * c_prev;
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
        c_prev = c;
    }
    // Monic polynomial x^n + c1 x^{n-1} + … + cn; roots by Durand–Kerner.
    let eval = |z: C| coeffs.iter().fold(C::new(0.0, 0.0), |acc, &c| acc * z + c);
    let seed = C::new(0.4, 0.9);
    let radius = 1.0 + coeffs.iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<C> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut denom = C::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots.iter().fold(C::new(1.0, 0.0), |acc, r| acc * r).re
}

/// Maximizes `f` on `[0, p1] × [0, p2]` over a `(n + 1)²` grid.
pub fn grid_max(f: impl Fn(f64, f64) -> f64, p1: f64, p2: f64, n: usize) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = p1 * i as f64 / n as f64;
        for j in 0..=n {
            let y = p2 * j as f64 / n as f64;
            let v = f(x, y);
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }
    best
}

/// Newton's method on `X + WᵀX⁻¹W − M` over all `n²` entries with a
/// finite-difference Jacobian, from several starts. Returns a symmetric
/// positive definite solution if any start converges to one.
pub fn riccati_newton_oracle(m: &DMatrix<f64>, w: &DMatrix<f64>, rng: &mut impl Rng, starts: usize) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let f = |x: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let inv = x.clone().try_inverse()?;
        Some(x + w.transpose() * inv * w - m)
    };
    let scale = m.norm();
    let mut candidates = vec![m.clone(), m * 0.5];
    for _ in 0..starts {
        let g = rand_matrix(rng, n, 1.0);
        candidates.push((&g * g.transpose() + DMatrix::identity(n, n) * 0.1) * (scale / n as f64));
    }
    for start in candidates {
        let mut x = start;
        for _ in 0..100 {
            let Some(fx) = f(&x) else { break };
            if fx.norm() <= 1e-12 * scale {
                break;
            }
            let h = 1e-7 * (1.0 + x.norm());
            let mut jac = DMatrix::zeros(n * n, n * n);
            for k in 0..n * n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let (Some(fp), Some(fm)) = (f(&xp), f(&xm)) else { break };
                jac.set_column(k, &DVector::from_column_slice(((fp - fm) / (2.0 * h)).as_slice()));
            }
            let Some(step) = jac.lu().solve(&DVector::from_column_slice(fx.as_slice())) else { break };
            let step = DMatrix::from_column_slice(n, n, step.as_slice());
            let mut t = 1.0;
            let base = fx.norm();
            let mut moved = false;
            for _ in 0..30 {
                let cand = &x - &step * t;
                if let Some(fc) = f(&cand) {
                    if fc.norm() < base {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if let Some(fx) = f(&x) {
            let sym = (&x + x.transpose()) * 0.5;
            let asym = (&x - x.transpose()).norm();
            if fx.norm() <= 1e-9 * scale && asym <= 1e-8 * scale && sym.clone().symmetric_eigenvalues().min() > 0.0 {
                return Some(sym);
            }
        }
    }
    None
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
