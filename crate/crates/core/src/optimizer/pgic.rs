//! Power allocation over parallel (diagonal) interference channels with
//! interference treated as noise on every subchannel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPair, ParallelGains};
use crate::error::{Error, Result};
use crate::matrix::project_capped_simplex;
use crate::starts::restart_rng;

use super::OptConfig;

const IMPROVEMENT_TOL: f64 = 1e-12;
const GRID: usize = 24;
const GOLDEN_TOL: f64 = 1e-13;
const MAX_PGIC_STARTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgicResult {
    pub p1_alloc: Vec<f64>,
    pub p2_alloc: Vec<f64>,
    pub sum_rate: f64,
    pub sub_rates: Vec<f64>,
    /// Per-subchannel noisy-interference condition at the allocation.
    pub per_sub_conditions: Vec<bool>,
    /// Common marginal-rate multipliers of the two budgets.
    pub multipliers: (f64, f64),
    /// Worst violation of the equal-marginal-rate conditions.
    pub kkt_residual: f64,
}

/// Treat-as-noise sum rate of subchannel `i`.
pub fn subchannel_rate(g: &ParallelGains, i: usize, p1: f64, p2: f64) -> f64 {
    let (h1, h2, h3, h4) = (g.h1[i], g.h2[i], g.h3[i], g.h4[i]);
    0.5 * (1.0 + h1 * h1 * p1 / (1.0 + h2 * h2 * p2)).ln() + 0.5 * (1.0 + h4 * h4 * p2 / (1.0 + h3 * h3 * p1)).ln()
}

/// `|h1h2|(1 + h3²P1) + |h3h4|(1 + h2²P2) ≤ |h1h4|` on subchannel `i`.
pub fn separation_condition(g: &ParallelGains, i: usize, p1: f64, p2: f64) -> bool {
    let (h1, h2, h3, h4) = (g.h1[i], g.h2[i], g.h3[i], g.h4[i]);
    (h1 * h2).abs() * (1.0 + h3 * h3 * p1) + (h3 * h4).abs() * (1.0 + h2 * h2 * p2) <= (h1 * h4).abs()
}

/// `∂C_i/∂P_{user,i}`.
fn marginal(g: &ParallelGains, i: usize, user: usize, p1: f64, p2: f64) -> f64 {
    let (h1, h2, h3, h4) = (g.h1[i], g.h2[i], g.h3[i], g.h4[i]);
    let (a1, a2, a3, a4) = (h1 * h1, h2 * h2, h3 * h3, h4 * h4);
    if user == 0 {
        0.5 * a1 / (1.0 + a2 * p2 + a1 * p1) + 0.5 * (a3 / (1.0 + a3 * p1 + a4 * p2) - a3 / (1.0 + a3 * p1))
    } else {
        0.5 * a4 / (1.0 + a3 * p1 + a4 * p2) + 0.5 * (a2 / (1.0 + a2 * p2 + a1 * p1) - a2 / (1.0 + a2 * p2))
    }
}

fn total(g: &ParallelGains, alloc: &[Vec<f64>; 2]) -> f64 {
    (0..g.len()).map(|i| subchannel_rate(g, i, alloc[0][i], alloc[1][i])).sum()
}

/// Maximizes `f` on `[lo, hi]`: coarse grid, then golden section around the
/// best grid point.
fn maximize_1d(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let h = (hi - lo) / GRID as f64;
    let mut best = (lo, f(lo));
    let mut best_k = 0;
    for k in 1..=GRID {
        let x = if k == GRID { hi } else { lo + h * k as f64 };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let mut a = lo + h * best_k.saturating_sub(1) as f64;
    let mut b = (lo + h * (best_k + 1) as f64).min(hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL * (1.0 + hi.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Cyclic single-coordinate and pairwise-transfer moves until a full sweep
/// gains less than the improvement tolerance.
fn coordinate_ascent(g: &ParallelGains, budgets: [f64; 2], mut alloc: [Vec<f64>; 2], max_sweeps: usize) -> ([Vec<f64>; 2], f64) {
    let n = g.len();
    let mut value = total(g, &alloc);
    for _ in 0..max_sweeps {
        let before = value;
        for u in 0..2 {
            if budgets[u] <= 0.0 {
                continue;
            }
            for i in 0..n {
                let used: f64 = alloc[u].iter().sum();
                let hi = (alloc[u][i] + budgets[u] - used).max(alloc[u][i]);
                let mut trial = alloc.clone();
                let (x, v) = maximize_1d(
                    |x| {
                        trial[u][i] = x;
                        total(g, &trial)
                    },
                    0.0,
                    hi,
                );
                if v > value {
                    alloc[u][i] = x;
                    value = v;
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (alloc[u][i], alloc[u][j]);
                    let mut trial = alloc.clone();
                    let (delta, v) = maximize_1d(
                        |d| {
                            trial[u][i] = a + d;
                            trial[u][j] = (b - d).max(0.0);
                            total(g, &trial)
                        },
                        -a,
                        b,
                    );
                    if v > value {
                        alloc[u][i] = a + delta;
                        alloc[u][j] = (b - delta).max(0.0);
                        value = v;
                    }
                }
            }
        }
        if value - before < IMPROVEMENT_TOL {
            break;
        }
    }
    (alloc, value)
}

/// Best common multiplier and the worst violation of
/// `∂C_i/∂P_i = μ` (active), `∂C_i/∂P_i ≤ μ` (inactive), `μ ≥ 0`, `μ = 0`
/// when the budget is slack.
fn kkt(derivs: &[f64], alloc: &[f64], budget: f64) -> (f64, f64) {
    if budget <= 0.0 {
        return (0.0, 0.0);
    }
    let active_tol = 1e-9 * budget;
    let tight = budget - alloc.iter().sum::<f64>() <= 1e-9 * budget.max(1.0);
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut inactive = f64::NEG_INFINITY;
    for (d, p) in derivs.iter().zip(alloc) {
        if *p > active_tol {
            hi = hi.max(*d);
            lo = lo.min(*d);
        } else {
            inactive = inactive.max(*d);
        }
    }
    let mu = if !tight {
        0.0
    } else if lo.is_finite() {
        (0.5 * (hi.max(inactive) + lo)).max(0.0)
    } else {
        inactive.max(0.0)
    };
    let mut residual: f64 = 0.0;
    for (d, p) in derivs.iter().zip(alloc) {
        let v = if *p > active_tol { (d - mu).abs() } else { d - mu };
        residual = residual.max(v);
    }
    (mu, residual)
}

pub fn pgic_allocate(ch: &ChannelPair, cfg: &OptConfig) -> Result<PgicResult> {
    let g = ch.parallel_gains().ok_or(Error::NotParallel)?;
    let n = g.len();
    let budgets = [ch.p1(), ch.p2()];
    let mut starts = vec![[vec![budgets[0] / n as f64; n], vec![budgets[1] / n as f64; n]]];
    for k in 1..cfg.restarts.clamp(1, MAX_PGIC_STARTS) {
        let mut rng = restart_rng(cfg.seed, k);
        let mut draw = |b: f64| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=b)).collect();
            project_capped_simplex(&raw, b)
        };
        let s1 = draw(budgets[0]);
        let s2 = draw(budgets[1]);
        starts.push([s1, s2]);
    }
    let mut best: Option<([Vec<f64>; 2], f64)> = None;
    for s in starts {
        let run = coordinate_ascent(g, budgets, s, cfg.max_iters);
        if best.as_ref().map_or(true, |b| run.1 > b.1) {
            best = Some(run);
        }
    }
    let ([p1, p2], sum_rate) = best.expect("at least one start");
    let d1: Vec<f64> = (0..n).map(|i| marginal(g, i, 0, p1[i], p2[i])).collect();
    let d2: Vec<f64> = (0..n).map(|i| marginal(g, i, 1, p1[i], p2[i])).collect();
    let (mu1, k1) = kkt(&d1, &p1, budgets[0]);
    let (mu2, k2) = kkt(&d2, &p2, budgets[1]);
    Ok(PgicResult {
        sub_rates: (0..n).map(|i| subchannel_rate(g, i, p1[i], p2[i])).collect(),
        per_sub_conditions: (0..n).map(|i| separation_condition(g, i, p1[i], p2[i])).collect(),
        multipliers: (mu1, mu2),
        kkt_residual: k1.max(k2),
        p1_alloc: p1,
        p2_alloc: p2,
        sum_rate,
    })
}
