//! Rate expressions built from `½ log|I + Σ H S Hᵀ|` terms, with analytic
//! gradients and Hessians in the covariances.

use nalgebra::{DMatrix, DVector};

use crate::channel::{ChannelPair, CovariancePair};
use crate::error::{Error, Result};
use crate::matrix::{logdet_pd, GenMatrix, SymMatrix};
use crate::regime::RegimeLabel;

/// `½ log|I + Σ_k H_k S_{u_k} H_kᵀ|`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDetTerm {
    parts: Vec<(usize, GenMatrix)>,
}

impl LogDetTerm {
    /// `parts` pairs a user index (0 or 1) with the matrix it is seen through.
    pub fn new(parts: Vec<(usize, GenMatrix)>) -> Self {
        assert!(!parts.is_empty() && parts.iter().all(|(u, _)| *u < 2));
        Self { parts }
    }

    fn rows(&self) -> usize {
        self.parts[0].1.nrows()
    }

    fn kernel(&self, cov: &CovariancePair) -> SymMatrix {
        let n = self.rows();
        let mut k = DMatrix::identity(n, n);
        for (u, h) in &self.parts {
            k += cov.get(*u).congruence(h).as_matrix();
        }
        SymMatrix::symmetrize(k)
    }

    fn kernel_inverse(&self, cov: &CovariancePair) -> Result<DMatrix<f64>> {
        let k = self.kernel(cov);
        k.as_matrix()
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or(Error::NotPositiveDefinite { min_eig: k.min_eigenvalue() })
    }

    pub fn value(&self, cov: &CovariancePair) -> Result<f64> {
        Ok(0.5 * logdet_pd(&self.kernel(cov))?)
    }

    /// `∂/∂S_u = ½ Σ_{k: u_k = u} H_kᵀ K⁻¹ H_k`.
    pub fn gradient(&self, cov: &CovariancePair) -> Result<[SymMatrix; 2]> {
        let t = cov.s1.dim();
        let kinv = self.kernel_inverse(cov)?;
        let mut g = [DMatrix::zeros(t, t), DMatrix::zeros(t, t)];
        for (u, h) in &self.parts {
            g[*u] += h.transpose() * &kinv * h * 0.5;
        }
        let [g0, g1] = g;
        Ok([SymMatrix::symmetrize(g0), SymMatrix::symmetrize(g1)])
    }
}

/// Linear combination of log-det terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RateExpr {
    terms: Vec<(f64, LogDetTerm)>,
}

impl RateExpr {
    pub fn log_det(parts: Vec<(usize, GenMatrix)>) -> Self {
        Self { terms: vec![(1.0, LogDetTerm::new(parts))] }
    }

    pub fn plus(mut self, other: &RateExpr) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn minus(self, other: &RateExpr) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { terms: self.terms.iter().map(|(w, t)| (w * c, t.clone())).collect() }
    }

    pub fn value(&self, cov: &CovariancePair) -> Result<f64> {
        let mut v = 0.0;
        for (c, term) in &self.terms {
            if *c != 0.0 {
                v += c * term.value(cov)?;
            }
        }
        Ok(v)
    }

    pub fn gradient(&self, cov: &CovariancePair) -> Result<[SymMatrix; 2]> {
        let t = cov.s1.dim();
        let mut g = [SymMatrix::zeros(t), SymMatrix::zeros(t)];
        for (c, term) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            let tg = term.gradient(cov)?;
            g[0] = g[0].add(&tg[0].scale(*c));
            g[1] = g[1].add(&tg[1].scale(*c));
        }
        Ok(g)
    }

    /// Value, gradient and Hessian in the coordinates of `layout`.
    pub(crate) fn derivatives(&self, cov: &CovariancePair, layout: &Layout) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let n = layout.dim();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut value = 0.0;
        for (c, term) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            value += c * term.value(cov)?;
            let kinv = term.kernel_inverse(cov)?;
            for (u, hu) in &term.parts {
                let Some(su) = layout.slot(*u) else { continue };
                let g = hu.transpose() * &kinv * hu * (0.5 * c);
                for (p, &(i, j)) in layout.pairs.iter().enumerate() {
                    grad[layout.index(su, p)] += if i == j { g[(i, i)] } else { g[(i, j)] + g[(j, i)] };
                }
                for (v, hv) in &term.parts {
                    let Some(sv) = layout.slot(*v) else { continue };
                    let x = hu.transpose() * &kinv * hv;
                    let y = x.transpose();
                    for (p, &pp) in layout.pairs.iter().enumerate() {
                        for (q, &qq) in layout.pairs.iter().enumerate() {
                            let mut tr = 0.0;
                            for (a, b) in pieces(pp) {
                                for (cc, d) in pieces(qq) {
                                    tr += x[(b, cc)] * y[(d, a)];
                                }
                            }
                            hess[(layout.index(su, p), layout.index(sv, q))] -= 0.5 * c * tr;
                        }
                    }
                }
            }
        }
        Ok((value, grad, hess))
    }
}

/// Index pairs `(a, b)` with `E = Σ e_a e_bᵀ` for a symmetric basis element.
pub(crate) fn pieces((i, j): (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    let second = if i == j { None } else { Some((j, i)) };
    std::iter::once((i, j)).chain(second)
}

/// Coordinates of the covariances of the users with a positive budget:
/// the upper triangles of `S_u`, user after user.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub t: usize,
    pub users: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl Layout {
    pub fn new(ch: &ChannelPair) -> Self {
        let t = ch.dim();
        let users = (0..2).filter(|&u| ch.power(u) > 0.0).collect();
        let mut pairs = Vec::new();
        for i in 0..t {
            for j in i..t {
                pairs.push((i, j));
            }
        }
        Self { t, users, pairs }
    }

    pub fn dim(&self) -> usize {
        self.users.len() * self.pairs.len()
    }

    pub fn slot(&self, user: usize) -> Option<usize> {
        self.users.iter().position(|&u| u == user)
    }

    pub fn index(&self, slot: usize, pair: usize) -> usize {
        slot * self.pairs.len() + pair
    }

    pub fn to_cov(&self, x: &DVector<f64>) -> CovariancePair {
        let mut s = [DMatrix::zeros(self.t, self.t), DMatrix::zeros(self.t, self.t)];
        for (slot, &u) in self.users.iter().enumerate() {
            for (p, &(i, j)) in self.pairs.iter().enumerate() {
                let v = x[self.index(slot, p)];
                s[u][(i, j)] = v;
                s[u][(j, i)] = v;
            }
        }
        let [s1, s2] = s;
        CovariancePair::new(SymMatrix::symmetrize(s1), SymMatrix::symmetrize(s2))
    }

    pub fn from_cov(&self, cov: &CovariancePair, extra: usize) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim() + extra);
        for (slot, &u) in self.users.iter().enumerate() {
            for (p, &(i, j)) in self.pairs.iter().enumerate() {
                x[self.index(slot, p)] = cov.get(u)[(i, j)];
            }
        }
        x
    }
}

/// `½ log|I + H1 S1 H1ᵀ + H2 S2 H2ᵀ|`: both signals at receiver 1.
pub fn rx1_joint(ch: &ChannelPair) -> RateExpr {
    RateExpr::log_det(vec![(0, ch.h1().clone()), (1, ch.h2().clone())])
}

/// `½ log|I + H3 S1 H3ᵀ + H4 S2 H4ᵀ|`: both signals at receiver 2.
pub fn rx2_joint(ch: &ChannelPair) -> RateExpr {
    RateExpr::log_det(vec![(0, ch.h3().clone()), (1, ch.h4().clone())])
}

/// Interference-free rate of one user over its own link.
pub fn own_link(ch: &ChannelPair, user: usize) -> RateExpr {
    match user {
        0 => RateExpr::log_det(vec![(0, ch.h1().clone())]),
        _ => RateExpr::log_det(vec![(1, ch.h4().clone())]),
    }
}

/// Rate of a user at the other user's receiver with its partner known.
pub fn cross_link(ch: &ChannelPair, user: usize) -> RateExpr {
    match user {
        0 => RateExpr::log_det(vec![(0, ch.h3().clone())]),
        _ => RateExpr::log_det(vec![(1, ch.h2().clone())]),
    }
}

/// Receiver 1 decoding its own signal with interference as noise.
pub fn rx1_tan(ch: &ChannelPair) -> RateExpr {
    rx1_joint(ch).minus(&cross_link(ch, 1))
}

/// Receiver 2 decoding its own signal with interference as noise.
pub fn rx2_tan(ch: &ChannelPair) -> RateExpr {
    rx2_joint(ch).minus(&cross_link(ch, 0))
}

pub fn tan_sum(ch: &ChannelPair) -> RateExpr {
    rx1_tan(ch).plus(&rx2_tan(ch))
}

/// Branches whose pointwise minimum is the sum-rate objective of a regime
/// with a concave characterization.
pub fn capacity_branches(ch: &ChannelPair, label: RegimeLabel) -> Result<Vec<RateExpr>> {
    let single_sum = || own_link(ch, 0).plus(&own_link(ch, 1));
    Ok(match label {
        RegimeLabel::Strong => vec![rx1_joint(ch), rx2_joint(ch), single_sum()],
        RegimeLabel::MixedRx2Strong => vec![rx2_joint(ch), rx1_tan(ch).plus(&own_link(ch, 1))],
        RegimeLabel::MixedRx1Strong => vec![rx1_joint(ch), rx2_tan(ch).plus(&own_link(ch, 0))],
        RegimeLabel::ZStrong => vec![rx1_joint(ch), single_sum()],
        RegimeLabel::ZWeak => vec![rx1_tan(ch).plus(&own_link(ch, 1))],
        other => {
            return Err(Error::WrongRegime {
                expected: "strong, mixed_rx1_strong, mixed_rx2_strong, z_strong or z_weak".into(),
                actual: other.to_string(),
            })
        }
    })
}

/// Sum rate when both receivers decode both messages.
pub fn compound_mac_branches(ch: &ChannelPair) -> Vec<RateExpr> {
    let mut out = vec![rx1_joint(ch), rx2_joint(ch)];
    for r1 in [own_link(ch, 0), cross_link(ch, 0)] {
        for r2 in [own_link(ch, 1), cross_link(ch, 1)] {
            out.push(r1.clone().plus(&r2));
        }
    }
    out
}

/// `max_{tr S ≤ P} ½ log|I + H S Hᵀ|` by water-filling over the eigenmodes
/// of `HᵀH`.
pub fn single_user_capacity(h: &GenMatrix, power: f64) -> f64 {
    let gains: Vec<f64> = SymMatrix::symmetrize(h.transpose() * h)
        .eigenvalues()
        .into_iter()
        .filter(|&g| g > 1e-300)
        .collect();
    if gains.is_empty() || power <= 0.0 {
        return 0.0;
    }
    let mut sorted = gains;
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut level = 0.0;
    for k in (1..=sorted.len()).rev() {
        let inv_sum: f64 = sorted[..k].iter().map(|g| 1.0 / g).sum();
        level = (power + inv_sum) / k as f64;
        if level > 1.0 / sorted[k - 1] {
            break;
        }
    }
    sorted.iter().map(|g| 0.5 * (g * level).max(1.0).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eye(t: usize) -> DMatrix<f64> {
        DMatrix::identity(t, t)
    }

    fn sample_channel() -> ChannelPair {
        ChannelPair::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]),
            DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.2, 0.5]),
            DMatrix::from_row_slice(2, 2, &[0.6, -0.3, 0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.4, 1.1]),
            1.5,
            2.0,
        )
        .unwrap()
    }

    fn sample_cov() -> CovariancePair {
        CovariancePair::new(
            SymMatrix::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.2, 0.5])).unwrap(),
            SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 0.6])).unwrap(),
        )
    }

    #[test]
    fn tan_sum_matches_channel_rates() {
        let ch = sample_channel();
        let cov = sample_cov();
        let (r1, r2) = crate::channel::tan_rates(&ch, &cov).unwrap();
        assert_relative_eq!(tan_sum(&ch).value(&cov).unwrap(), r1 + r2, epsilon = 1e-13);
    }

    #[test]
    fn coordinate_derivatives_match_finite_differences() {
        let ch = sample_channel();
        let cov = sample_cov();
        let layout = Layout::new(&ch);
        let expr = tan_sum(&ch);
        let x0 = layout.from_cov(&cov, 0);
        let (_, g, h) = expr.derivatives(&cov, &layout).unwrap();
        let eps = 1e-5;
        for k in 0..layout.dim() {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[k] += eps;
            xm[k] -= eps;
            let fd = (expr.value(&layout.to_cov(&xp)).unwrap() - expr.value(&layout.to_cov(&xm)).unwrap()) / (2.0 * eps);
            assert_relative_eq!(g[k], fd, epsilon = 1e-8);
            let (_, gp, _) = expr.derivatives(&layout.to_cov(&xp), &layout).unwrap();
            let (_, gm, _) = expr.derivatives(&layout.to_cov(&xm), &layout).unwrap();
            for l in 0..layout.dim() {
                assert_relative_eq!(h[(l, k)], (gp[l] - gm[l]) / (2.0 * eps), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn matrix_gradient_agrees_with_coordinates() {
        let ch = sample_channel();
        let cov = sample_cov();
        let layout = Layout::new(&ch);
        let expr = rx2_tan(&ch);
        let g = expr.gradient(&cov).unwrap();
        let (_, gc, _) = expr.derivatives(&cov, &layout).unwrap();
        assert_relative_eq!(gc[1], 2.0 * g[0][(0, 1)], epsilon = 1e-13);
        assert_relative_eq!(gc[5], g[1][(1, 1)], epsilon = 1e-13);
    }

    #[test]
    fn frozen_user_has_no_coordinates() {
        let ch = ChannelPair::new(eye(2), eye(2), eye(2), eye(2), 1.0, 0.0).unwrap();
        let layout = Layout::new(&ch);
        assert_eq!(layout.users, vec![0]);
        assert_eq!(layout.dim(), 3);
    }

    #[test]
    fn waterfilling() {
        assert_relative_eq!(single_user_capacity(&eye(2), 2.0), 2f64.ln(), epsilon = 1e-15);
        // Gains 4 and 0.25 at P = 1: only the strong mode is used.
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        assert_relative_eq!(single_user_capacity(&h, 1.0), 0.5 * 5f64.ln(), epsilon = 1e-15);
        // P = 10: level ν = (10 + 1/4 + 4)/2 = 7.125.
        assert_relative_eq!(
            single_user_capacity(&h, 10.0),
            0.5 * (4.0f64 * 7.125).ln() + 0.5 * (0.25f64 * 7.125).ln(),
            epsilon = 1e-14
        );
        assert_eq!(single_user_capacity(&eye(2), 0.0), 0.0);
    }

    #[test]
    fn branches_reject_search_regimes() {
        let ch = sample_channel();
        assert!(capacity_branches(&ch, RegimeLabel::Noisy).is_err());
        assert_eq!(capacity_branches(&ch, RegimeLabel::Strong).unwrap().len(), 3);
        assert_eq!(compound_mac_branches(&ch).len(), 6);
    }
}
