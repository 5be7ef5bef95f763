//! Projected gradient ascent with Armijo backtracking for smooth (possibly
//! nonconcave) rate expressions.

use crate::channel::{ChannelPair, CovariancePair};
use crate::error::Result;
use crate::matrix::{project_trace_psd, SymMatrix};

use super::objective::RateExpr;
use super::Run;

const INITIAL_STEP: f64 = 0.5;
const SHRINK: f64 = 0.5;
const SLOPE_FRACTION: f64 = 1e-4;
const MAX_STEP: f64 = 1e4;
const STATIONARY_TOL: f64 = 1e-12;

pub(crate) fn project(ch: &ChannelPair, cov: &CovariancePair) -> CovariancePair {
    CovariancePair::new(project_trace_psd(&cov.s1, ch.p1()), project_trace_psd(&cov.s2, ch.p2()))
}

pub(crate) fn shifted(cov: &CovariancePair, dir: &[SymMatrix; 2], alpha: f64) -> CovariancePair {
    CovariancePair::new(cov.s1.add(&dir[0].scale(alpha)), cov.s2.add(&dir[1].scale(alpha)))
}

fn diff_dot(g: &[SymMatrix; 2], a: &CovariancePair, b: &CovariancePair) -> f64 {
    g[0].dot(&a.s1.sub(&b.s1)) + g[1].dot(&a.s2.sub(&b.s2))
}

fn diff_norm(a: &CovariancePair, b: &CovariancePair) -> f64 {
    (a.s1.sub(&b.s1).frobenius().powi(2) + a.s2.sub(&b.s2).frobenius().powi(2)).sqrt()
}

pub(crate) fn projected_ascent(ch: &ChannelPair, expr: &RateExpr, start: &CovariancePair, max_iters: usize) -> Result<Run> {
    let t = ch.dim();
    let mut x = project(ch, start);
    let mut fx = expr.value(&x)?;
    let mut trace = vec![fx];
    let mut step = INITIAL_STEP;
    for _ in 0..max_iters {
        let mut g = expr.gradient(&x)?;
        for (u, gu) in g.iter_mut().enumerate() {
            if ch.power(u) <= 0.0 {
                *gu = SymMatrix::zeros(t);
            }
        }
        let scale = 1.0 + x.s1.frobenius() + x.s2.frobenius();
        if diff_norm(&project(ch, &shifted(&x, &g, 1.0)), &x) <= STATIONARY_TOL * scale {
            break;
        }
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = project(ch, &shifted(&x, &g, alpha));
            let slope = diff_dot(&g, &cand, &x);
            let fc = expr.value(&cand)?;
            if fc >= fx + SLOPE_FRACTION * slope && slope > 0.0 {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= SHRINK;
        }
        let Some((cand, fc)) = accepted else { break };
        x = cand;
        fx = fc;
        trace.push(fx);
        step = (alpha / SHRINK).min(MAX_STEP);
    }
    Ok(Run { cov: x, value: fx, trace })
}
