//! Capacity optimizers: treat-as-noise sum rate, concave max-min sum
//! capacities, strong-interference region boundaries, parallel-channel
//! power allocation and the interference-scaling sweep.

pub mod objective;

mod ascent;
mod minmax;
mod pgic;
mod region;
mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPair, CovariancePair};
use crate::error::{Error, Result};
use crate::regime::{classify, structural_regime, RegimeLabel, SearchConfig};
use crate::starts::multistart;

pub use minmax::ACTIVE_BRANCH_TOL;
pub use objective::{capacity_branches, compound_mac_branches, single_user_capacity, tan_sum, LogDetTerm, RateExpr};
pub use pgic::{pgic_allocate, separation_condition, subchannel_rate, PgicResult};
pub use region::{region_boundary, RegionBoundary};
pub use sweep::{interference_sweep, SweepRow, SweepTemplate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    /// Total number of starting points per optimization.
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Relative spread allowed between restarts of a concave problem.
    pub agree_tol: f64,
    /// Settings of the noisy-interference search used by classification.
    pub search: SearchConfig,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { restarts: 20, max_iters: 2_000, seed: 0, agree_tol: 1e-6, search: SearchConfig::default() }
    }
}

impl OptConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.search.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub sum_rate_nats: f64,
    pub achieving: CovariancePair,
    pub regime: Option<RegimeLabel>,
    /// Objective values along the run that produced the best point.
    pub objective_trace: Vec<f64>,
    /// `max − min` of the final values over restarts.
    pub multistart_spread: f64,
    pub restart_values: Vec<f64>,
    /// The objective is concave, so the value is the global maximum.
    pub concave: bool,
    /// The value is the sum capacity of a certified regime. When false it is
    /// only an achievable rate (a lower bound).
    pub capacity_certified: bool,
}

pub(crate) struct Run {
    pub cov: CovariancePair,
    pub value: f64,
    pub trace: Vec<f64>,
}

/// Index-ordered best-of reduction; ties keep the earliest start.
fn collect_runs(runs: Vec<Result<Run>>, regime: Option<RegimeLabel>, concave: bool) -> Result<RateResult> {
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_>>()?;
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let hi = restart_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = restart_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let best = runs.into_iter().find(|r| r.value == hi).expect("at least one run");
    Ok(RateResult {
        sum_rate_nats: best.value.max(0.0),
        achieving: best.cov,
        regime,
        objective_trace: best.trace,
        multistart_spread: hi - lo,
        restart_values,
        concave,
        capacity_certified: false,
    })
}

/// Treat-as-noise sum rate `R1 + R2` maximized over the power constraints.
/// The problem is nonconcave in general; the result is the best of the
/// multistart runs.
pub fn maximize_tan(ch: &ChannelPair, cfg: &OptConfig) -> Result<RateResult> {
    let expr = tan_sum(ch);
    let starts = multistart(ch, ch.h1(), ch.h4(), cfg.restarts, cfg.seed);
    let runs = starts.par_iter().map(|s| ascent::projected_ascent(ch, &expr, s, cfg.max_iters)).collect();
    collect_runs(runs, None, false)
}

fn solve_concave(ch: &ChannelPair, exprs: &[RateExpr], regime: Option<RegimeLabel>, cfg: &OptConfig) -> Result<RateResult> {
    let starts = multistart(ch, ch.h1(), ch.h4(), cfg.restarts, cfg.seed);
    let runs = starts.par_iter().map(|s| minmax::maximize_min(ch, exprs, s, cfg.max_iters)).collect();
    let result = collect_runs(runs, regime, true)?;
    let tolerance = cfg.agree_tol * result.sum_rate_nats.abs().max(1e-12);
    if result.multistart_spread > tolerance {
        return Err(Error::NonConcaveAgreementFailure { spread: result.multistart_spread, tolerance });
    }
    Ok(result)
}

/// Maximizes the pointwise minimum of the concave branches that give the
/// sum capacity of `label`. The channel must structurally belong to `label`.
pub fn maximize_minmax(ch: &ChannelPair, label: RegimeLabel, cfg: &OptConfig) -> Result<RateResult> {
    let exprs = capacity_branches(ch, label)?;
    let actual = structural_regime(ch)?;
    if actual != Some(label) {
        return Err(Error::WrongRegime {
            expected: label.to_string(),
            actual: actual.map_or_else(|| "no structural regime".to_string(), |l| l.to_string()),
        });
    }
    solve_concave(ch, &exprs, Some(label), cfg)
}

/// Classifies the channel and evaluates its sum capacity. For unclassified
/// channels the best known achievable rate (treat-as-noise or both receivers
/// decoding both messages) is returned with `capacity_certified = false`.
pub fn sum_capacity(ch: &ChannelPair, cfg: &OptConfig) -> Result<RateResult> {
    let report = classify(ch, &cfg.search)?;
    let mut result = match report.label {
        RegimeLabel::Noisy => {
            let mut r = maximize_tan(ch, cfg)?;
            r.regime = Some(RegimeLabel::Noisy);
            r.capacity_certified = true;
            r
        }
        RegimeLabel::Unclassified => {
            let tan = maximize_tan(ch, cfg)?;
            let mac = solve_concave(ch, &compound_mac_branches(ch), None, cfg)?;
            let mut r = if mac.sum_rate_nats > tan.sum_rate_nats { mac } else { tan };
            r.capacity_certified = false;
            r
        }
        label => {
            let mut r = solve_concave(ch, &capacity_branches(ch, label)?, Some(label), cfg)?;
            r.capacity_certified = true;
            r
        }
    };
    result.regime = Some(report.label);
    Ok(result)
}
