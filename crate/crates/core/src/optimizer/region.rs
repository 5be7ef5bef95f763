//! Pareto boundary of the strong and one-sided strong capacity regions by
//! weighted-sum scalarization.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPair, CovariancePair};
use crate::error::{Error, Result};
use crate::regime::{structural_regime, RegimeLabel};
use crate::starts::multistart;

use super::minmax::maximize_min;
use super::objective::{own_link, rx1_joint, rx2_joint, RateExpr};
use super::OptConfig;

const DEDUP_TOL: f64 = 1e-9;
const STARTS_PER_WEIGHT: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    /// `(R1, R2)` in nats, `R1` increasing and `R2` strictly decreasing.
    pub points: Vec<(f64, f64)>,
    /// Weight `(μ1, μ2)` that produced each point.
    pub weights: Vec<(f64, f64)>,
    pub regime: RegimeLabel,
}

struct Bounds {
    single1: RateExpr,
    single2: RateExpr,
    sums: Vec<RateExpr>,
}

impl Bounds {
    /// Concave pieces whose minimum is `max μ·R` over the rate polytope.
    fn scalarized(&self, mu1: f64, mu2: f64) -> Vec<RateExpr> {
        let mut out = vec![self.single1.scaled(mu1).plus(&self.single2.scaled(mu2))];
        let (lead, hi, lo) = if mu1 >= mu2 { (&self.single1, mu1, mu2) } else { (&self.single2, mu2, mu1) };
        for s in &self.sums {
            out.push(lead.scaled(hi - lo).plus(&s.scaled(lo)));
            out.push(s.scaled(hi));
        }
        out
    }

    /// Optimal vertex of the rate polytope at `cov` for the given weight.
    fn corner(&self, cov: &CovariancePair, mu1: f64, mu2: f64) -> Result<(f64, f64)> {
        let c1 = self.single1.value(cov)?;
        let c2 = self.single2.value(cov)?;
        let mut cs = f64::INFINITY;
        for s in &self.sums {
            cs = cs.min(s.value(cov)?);
        }
        Ok(if mu1 >= mu2 {
            let r1 = c1.min(cs).max(0.0);
            (r1, c2.min(cs - r1).max(0.0))
        } else {
            let r2 = c2.min(cs).max(0.0);
            (c1.min(cs - r2).max(0.0), r2)
        })
    }
}

/// Traces `n_weights` boundary points of the capacity region. The weights are
/// `(cos²θ, sin²θ)` at `θ_k = (k + ½)·π / (2n)`, so a single weight gives the
/// sum-rate point.
pub fn region_boundary(ch: &ChannelPair, n_weights: usize, cfg: &OptConfig) -> Result<RegionBoundary> {
    let regime = structural_regime(ch)?;
    let with_rx2 = match regime {
        Some(RegimeLabel::Strong) => true,
        Some(RegimeLabel::ZStrong) => false,
        other => {
            return Err(Error::WrongRegime {
                expected: "strong or z_strong".into(),
                actual: other.map_or_else(|| "no structural regime".to_string(), |l| l.to_string()),
            })
        }
    };
    if n_weights == 0 {
        return Err(Error::InvalidInput("at least one weight is required".into()));
    }
    let mut sums = vec![rx1_joint(ch)];
    if with_rx2 {
        sums.push(rx2_joint(ch));
    }
    let bounds = Bounds { single1: own_link(ch, 0), single2: own_link(ch, 1), sums };
    let starts = multistart(ch, ch.h1(), ch.h4(), STARTS_PER_WEIGHT.min(cfg.restarts.max(1)), cfg.seed);
    let weights: Vec<(f64, f64)> = (0..n_weights)
        .map(|k| {
            let theta = (k as f64 + 0.5) * PI / (2.0 * n_weights as f64);
            (theta.cos().powi(2), theta.sin().powi(2))
        })
        .collect();

    let raw: Vec<Result<(f64, f64)>> = weights
        .par_iter()
        .map(|&(mu1, mu2)| {
            let exprs = bounds.scalarized(mu1, mu2);
            let mut best: Option<(CovariancePair, f64)> = None;
            for s in &starts {
                let run = maximize_min(ch, &exprs, s, cfg.max_iters)?;
                if best.as_ref().map_or(true, |b| run.value > b.1) {
                    best = Some((run.cov, run.value));
                }
            }
            let (cov, _) = best.expect("at least one start");
            bounds.corner(&cov, mu1, mu2)
        })
        .collect();

    let mut tagged = Vec::with_capacity(n_weights);
    for (p, w) in raw.into_iter().zip(weights) {
        tagged.push((p?, w));
    }
    tagged.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(b.0 .1.total_cmp(&a.0 .1)));
    let mut kept: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for item in tagged.into_iter().rev() {
        let dominated = kept.last().map_or(false, |k| item.0 .1 <= k.0 .1 + DEDUP_TOL);
        if !dominated {
            kept.push(item);
        }
    }
    kept.reverse();
    Ok(RegionBoundary {
        points: kept.iter().map(|k| k.0).collect(),
        weights: kept.iter().map(|k| k.1).collect(),
        regime: if with_rx2 { RegimeLabel::Strong } else { RegimeLabel::ZStrong },
    })
}
