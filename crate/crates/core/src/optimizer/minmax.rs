//! Maximization of a pointwise minimum of concave rate expressions.
//!
//! A short projected supergradient phase finds a reasonable point; a
//! log-barrier Newton method on the epigraph `τ ≤ f_k(S)` then converges to
//! the optimum to near machine accuracy.

use nalgebra::{DMatrix, DVector};

use crate::channel::{ChannelPair, CovariancePair};
use crate::error::Result;
use crate::matrix::SymMatrix;

use super::ascent::{project, shifted};
use super::objective::{pieces, Layout, RateExpr};
use super::Run;

/// Branches within this distance of the minimum share the supergradient.
pub const ACTIVE_BRANCH_TOL: f64 = 1e-8;

const WARMUP_ITERS: usize = 60;
const WARMUP_STEP: f64 = 0.5;
const BARRIER_GROWTH: f64 = 10.0;
const BARRIER_GAP: f64 = 1e-11;
const MAX_NEWTON: usize = 200;

pub(crate) fn min_value(exprs: &[RateExpr], cov: &CovariancePair) -> Result<f64> {
    let mut m = f64::INFINITY;
    for e in exprs {
        m = m.min(e.value(cov)?);
    }
    Ok(m)
}

/// Diminishing-step projected supergradient ascent in power-normalized
/// coordinates. Returns the best iterate.
fn supergradient(ch: &ChannelPair, exprs: &[RateExpr], start: &CovariancePair, iters: usize, trace: &mut Vec<f64>) -> Result<(CovariancePair, f64)> {
    let t = ch.dim();
    let mut x = project(ch, start);
    let mut best = (x.clone(), min_value(exprs, &x)?);
    trace.push(best.1);
    for k in 1..=iters {
        let values: Vec<f64> = exprs.iter().map(|e| e.value(&x)).collect::<Result<_>>()?;
        let m = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut g = [SymMatrix::zeros(t), SymMatrix::zeros(t)];
        let mut active = 0;
        for (e, v) in exprs.iter().zip(&values) {
            if *v - m <= ACTIVE_BRANCH_TOL {
                let eg = e.gradient(&x)?;
                g[0] = g[0].add(&eg[0]);
                g[1] = g[1].add(&eg[1]);
                active += 1;
            }
        }
        for u in 0..2 {
            g[u] = g[u].scale(ch.power(u) / active as f64);
        }
        let norm = (g[0].dot(&g[0]) + g[1].dot(&g[1])).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        for u in 0..2 {
            g[u] = g[u].scale(ch.power(u) / norm);
        }
        x = project(ch, &shifted(&x, &g, WARMUP_STEP / (k as f64).sqrt()));
        let v = min_value(exprs, &x)?;
        trace.push(v);
        if v > best.1 {
            best = (x.clone(), v);
        }
    }
    Ok(best)
}

struct Barrier<'a> {
    ch: &'a ChannelPair,
    exprs: &'a [RateExpr],
    layout: Layout,
}

impl Barrier<'_> {
    fn tau_index(&self) -> usize {
        self.layout.dim()
    }

    fn budget_terms(&self, cov: &CovariancePair) -> Option<f64> {
        let mut acc = 0.0;
        for &u in &self.layout.users {
            let s = cov.get(u);
            let chol = s.as_matrix().clone().cholesky()?;
            acc += 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let slack = self.ch.power(u) - s.trace();
            if slack <= 0.0 {
                return None;
            }
            acc += slack.ln();
        }
        Some(acc)
    }

    fn phi(&self, x: &DVector<f64>, tb: f64) -> Option<f64> {
        let cov = self.layout.to_cov(x);
        let tau = x[self.tau_index()];
        let mut acc = self.budget_terms(&cov)?;
        for e in self.exprs {
            let gap = e.value(&cov).ok()? - tau;
            if gap <= 0.0 {
                return None;
            }
            acc += gap.ln();
        }
        Some(tb * tau + acc)
    }

    fn derivatives(&self, x: &DVector<f64>, tb: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let d = self.layout.dim();
        let ti = self.tau_index();
        let cov = self.layout.to_cov(x);
        let tau = x[ti];
        let mut grad = DVector::zeros(d + 1);
        let mut hess = DMatrix::zeros(d + 1, d + 1);
        grad[ti] = tb;
        for e in self.exprs {
            let (f, gf, hf) = e.derivatives(&cov, &self.layout)?;
            let s = f - tau;
            let s2 = s * s;
            for i in 0..d {
                grad[i] += gf[i] / s;
                hess[(i, ti)] += gf[i] / s2;
                hess[(ti, i)] += gf[i] / s2;
                for j in 0..d {
                    hess[(i, j)] += hf[(i, j)] / s - gf[i] * gf[j] / s2;
                }
            }
            grad[ti] -= 1.0 / s;
            hess[(ti, ti)] -= 1.0 / s2;
        }
        let pairs = &self.layout.pairs;
        for (slot, &u) in self.layout.users.iter().enumerate() {
            let s = cov.get(u);
            let sinv = s.as_matrix().clone().cholesky().expect("barrier iterate is interior").inverse();
            let slack = self.ch.power(u) - s.trace();
            let tr_e = |(i, j): (usize, usize)| if i == j { 1.0 } else { 0.0 };
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let ip = self.layout.index(slot, p);
                grad[ip] += if i == j { sinv[(i, i)] } else { 2.0 * sinv[(i, j)] } - tr_e((i, j)) / slack;
                for (q, &(k, l)) in pairs.iter().enumerate() {
                    let iq = self.layout.index(slot, q);
                    let mut tr = 0.0;
                    for (a, b) in pieces((i, j)) {
                        for (c, dd) in pieces((k, l)) {
                            tr += sinv[(b, c)] * sinv[(dd, a)];
                        }
                    }
                    hess[(ip, iq)] -= tr + tr_e((i, j)) * tr_e((k, l)) / (slack * slack);
                }
            }
        }
        Ok((grad, hess))
    }

    /// Newton ascent on the barrier function for a fixed weight `tb`.
    fn center(&self, x: &mut DVector<f64>, tb: f64) -> Result<()> {
        for _ in 0..MAX_NEWTON {
            let Some(phi0) = self.phi(x, tb) else { break };
            let (g, h) = self.derivatives(x, tb)?;
            let Some(dir) = newton_direction(&g, &h) else { break };
            let dec = g.dot(&dir);
            if !(dec > 1e-12) {
                break;
            }
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let cand = &*x + &dir * s;
                if let Some(p) = self.phi(&cand, tb) {
                    if p >= phi0 + 0.25 * s * dec {
                        *x = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Ok(())
    }
}

/// Solves `(−H) d = g`, regularizing `−H` if it is not numerically PD.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let neg = -h;
    let scale = neg.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..20 {
        let mut a = neg.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += shift;
        }
        if let Some(c) = a.cholesky() {
            let d = c.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 10.0 };
    }
    None
}

fn barrier_solve(ch: &ChannelPair, exprs: &[RateExpr], warm: &CovariancePair, trace: &mut Vec<f64>) -> Result<(CovariancePair, f64)> {
    let layout = Layout::new(ch);
    if layout.dim() == 0 {
        let cov = CovariancePair::zero(ch.dim());
        let v = min_value(exprs, &cov)?;
        trace.push(v);
        return Ok((cov, v));
    }
    let t = ch.dim();
    let interior = |u: usize| warm.get(u).scale(0.9).add(&SymMatrix::scaled_identity(t, 0.05 * ch.power(u) / t as f64));
    let start = CovariancePair::new(interior(0), interior(1));
    let barrier = Barrier { ch, exprs, layout };
    let mut x = barrier.layout.from_cov(&start, 1);
    x[barrier.tau_index()] = min_value(exprs, &start)? - 1.0;
    let m = exprs.len() + barrier.layout.users.len() * (t + 1);
    let mut tb = 1.0;
    loop {
        barrier.center(&mut x, tb)?;
        trace.push(min_value(exprs, &barrier.layout.to_cov(&x))?);
        if m as f64 / tb < BARRIER_GAP {
            break;
        }
        tb *= BARRIER_GROWTH;
    }
    let cov = project(ch, &barrier.layout.to_cov(&x));
    let v = min_value(exprs, &cov)?;
    Ok((cov, v))
}

pub(crate) fn maximize_min(ch: &ChannelPair, exprs: &[RateExpr], start: &CovariancePair, max_iters: usize) -> Result<Run> {
    let mut trace = Vec::new();
    let (warm, warm_value) = supergradient(ch, exprs, start, WARMUP_ITERS.min(max_iters), &mut trace)?;
    let (cov, value) = barrier_solve(ch, exprs, &warm, &mut trace)?;
    if value >= warm_value {
        Ok(Run { cov, value, trace })
    } else {
        Ok(Run { cov: warm, value: warm_value, trace })
    }
}
