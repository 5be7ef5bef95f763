//! Regime classification: noisy-interference certificates (pointwise and
//! searched over all admissible covariances), the Σ-pair fixed point, and
//! the Loewner-order tests for strong, mixed and one-sided interference.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{genie_matrices, validate, ChannelPair, CovariancePair, ValidationReport};
use crate::error::{Error, Result};
use crate::matrix::{is_pd, project_trace_psd, psd_order_relative, schur_psd_exists, PsdOrdering, SymMatrix};
use crate::riccati;
use crate::starts::multistart;

/// Iteration cap of the Σ-pair fixed point.
pub const SIGMA_MAX_ITERS: usize = 5_000;

/// Residual required of a reported Σ pair.
pub const SIGMA_TOL: f64 = 1e-9;

const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    Noisy,
    Strong,
    MixedRx1Strong,
    MixedRx2Strong,
    ZWeak,
    ZStrong,
    Unclassified,
}

impl RegimeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeLabel::Noisy => "noisy",
            RegimeLabel::Strong => "strong",
            RegimeLabel::MixedRx1Strong => "mixed_rx1_strong",
            RegimeLabel::MixedRx2Strong => "mixed_rx2_strong",
            RegimeLabel::ZWeak => "z_weak",
            RegimeLabel::ZStrong => "z_strong",
            RegimeLabel::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Knobs of the worst-case covariance search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Random starts (in addition to the deterministic ones).
    pub restarts: usize,
    /// Initial step as a fraction of `P / t`.
    pub step_scale: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Slack on the ½ threshold.
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { restarts: 20, step_scale: 0.1, max_iters: 2_000, seed: 0, tol: 1e-8 }
    }
}

/// Numerical radii of the two genie conditions at one covariance pair.
/// A non-positive-definite `M` yields an infinite radius.
pub fn noisy_at(ch: &ChannelPair, cov: &CovariancePair) -> Result<(f64, f64)> {
    let g = genie_matrices(ch, cov)?;
    let radius = |m: &SymMatrix, w: &DMatrix<f64>| -> Result<f64> {
        if !is_pd(m) {
            return Ok(f64::INFINITY);
        }
        Ok(riccati::solvable(m, w, 0.0)?.radius)
    };
    Ok((radius(&g.m1, &g.w1)?, radius(&g.m2, &g.w2)?))
}

/// Outcome of the worst-case radius search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisySearch {
    /// Largest radius found is at most `½ + tol`. Only as strong as the
    /// search coverage: a sufficient-condition verifier, not a proof.
    pub holds: bool,
    pub worst: CovariancePair,
    pub radius: f64,
    pub starts: usize,
    pub evaluations: usize,
    /// Best radius reached from each start, in start order.
    pub per_start: Vec<f64>,
}

fn vech_pairs(t: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(t * (t + 1) / 2);
    for i in 0..t {
        for j in i..t {
            v.push((i, j));
        }
    }
    v
}

fn unit_basis(t: usize, (i, j): (usize, usize)) -> SymMatrix {
    let mut e = DMatrix::zeros(t, t);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    SymMatrix::symmetrize(e)
}

/// Zero, isotropic and interference-aligned rank-one starts followed by
/// `restarts` random ones.
fn search_starts(ch: &ChannelPair, cfg: &SearchConfig) -> Vec<CovariancePair> {
    multistart(ch, ch.h3(), ch.h2(), cfg.restarts + 3, cfg.seed)
}

struct RadiusSearch<'a> {
    ch: &'a ChannelPair,
    cfg: &'a SearchConfig,
    basis: Vec<SymMatrix>,
    threshold: f64,
}

struct StartOutcome {
    cov: CovariancePair,
    radius: f64,
    evaluations: usize,
}

impl RadiusSearch<'_> {
    fn eval(&self, cov: &CovariancePair) -> Result<f64> {
        let (r1, r2) = noisy_at(self.ch, cov)?;
        Ok(r1.max(r2))
    }

    fn project(&self, cov: &CovariancePair) -> CovariancePair {
        CovariancePair::new(project_trace_psd(&cov.s1, self.ch.p1()), project_trace_psd(&cov.s2, self.ch.p2()))
    }

    /// Projected ascent in power-normalized coordinates with central
    /// finite-difference gradients and an adaptive step.
    fn run(&self, start: &CovariancePair) -> Result<StartOutcome> {
        let t = self.ch.dim();
        let powers = [self.ch.p1(), self.ch.p2()];
        let mut cur = self.project(start);
        let mut val = self.eval(&cur)?;
        let mut evaluations = 1;
        let mut step = self.cfg.step_scale / t as f64;
        let mut iters = 0;
        while val <= self.threshold && iters < self.cfg.max_iters && step > 1e-10 {
            iters += 1;
            let mut grads = [SymMatrix::zeros(t), SymMatrix::zeros(t)];
            let mut norm2 = 0.0;
            for user in 0..2 {
                if powers[user] <= 0.0 {
                    continue;
                }
                let h = FD_STEP * powers[user];
                let mut g = DMatrix::zeros(t, t);
                for e in &self.basis {
                    let mut plus = cur.clone();
                    let mut minus = cur.clone();
                    let delta = e.scale(h);
                    if user == 0 {
                        plus.s1 = plus.s1.add(&delta);
                        minus.s1 = minus.s1.sub(&delta);
                    } else {
                        plus.s2 = plus.s2.add(&delta);
                        minus.s2 = minus.s2.sub(&delta);
                    }
                    let fp = self.eval(&plus)?.min(1e6);
                    let fm = self.eval(&minus)?.min(1e6);
                    evaluations += 2;
                    // Derivative along the normalized coordinate S / P.
                    let d = (fp - fm) / (2.0 * FD_STEP);
                    g += e.as_matrix() * d;
                }
                let g = SymMatrix::symmetrize(g);
                norm2 += g.dot(&g);
                grads[user] = g;
            }
            let norm = norm2.sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            let mut cand = cur.clone();
            cand.s1 = cur.s1.add(&grads[0].scale(step * powers[0] / norm));
            cand.s2 = cur.s2.add(&grads[1].scale(step * powers[1] / norm));
            let cand = self.project(&cand);
            let cval = self.eval(&cand)?;
            evaluations += 1;
            if cval > val {
                cur = cand;
                val = cval;
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        Ok(StartOutcome { cov: cur, radius: val, evaluations })
    }
}

/// Searches the admissible covariance set for the largest genie radius.
///
/// Each start climbs independently; a start stops as soon as it exceeds
/// `½ + tol`. Starts run in parallel and are merged in start order, so the
/// result is identical for a fixed seed.
pub fn noisy_global(ch: &ChannelPair, cfg: &SearchConfig) -> Result<NoisySearch> {
    let v = validate(ch);
    if !v.invertible_h1_h4 {
        return Err(Error::SingularChannel { which: if v.invertible(0) { "H4" } else { "H1" } });
    }
    let t = ch.dim();
    let search = RadiusSearch {
        ch,
        cfg,
        basis: vech_pairs(t).into_iter().map(|p| unit_basis(t, p)).collect(),
        threshold: 0.5 + cfg.tol,
    };
    let starts = search_starts(ch, cfg);
    let outcomes: Vec<Result<StartOutcome>> = starts.par_iter().map(|s| search.run(s)).collect();
    let mut best: Option<StartOutcome> = None;
    let mut per_start = Vec::with_capacity(outcomes.len());
    let mut evaluations = 0;
    for o in outcomes {
        let o = o?;
        per_start.push(o.radius);
        evaluations += o.evaluations;
        if best.as_ref().map_or(true, |b| o.radius > b.radius) {
            best = Some(o);
        }
    }
    let best = best.expect("at least one start");
    Ok(NoisySearch {
        holds: best.radius <= search.threshold,
        worst: best.cov,
        radius: best.radius,
        starts: per_start.len(),
        evaluations,
        per_start,
    })
}

/// Positive definite `Σ1`, `Σ2` with `Σ1 ⪯ I − A2Σ2⁻¹A2ᵀ` and
/// `Σ2 ⪯ I − A1Σ1⁻¹A1ᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaPair {
    pub sigma1: SymMatrix,
    pub sigma2: SymMatrix,
    /// Largest violation of the two matrix inequalities.
    pub residual: f64,
    pub iterations: usize,
}

fn conditional_cov(a: &DMatrix<f64>, sigma: &SymMatrix) -> Option<SymMatrix> {
    let inv = sigma.as_matrix().clone().cholesky()?.inverse();
    let t = a.nrows();
    Some(SymMatrix::symmetrize(DMatrix::identity(t, t) - a * inv * a.transpose()))
}

/// Alternates `Σ1 ← I − A2Σ2⁻¹A2ᵀ`, `Σ2 ← I − A1Σ1⁻¹A1ᵀ` from `Σ1 = Σ2 = I`.
/// The sequence decreases monotonically; it reaches a valid pair exactly
/// when one exists (up to the iteration cap).
pub fn sigma_fixed_point(ch: &ChannelPair, cov: &CovariancePair) -> Result<Option<SigmaPair>> {
    let g = genie_matrices(ch, cov)?;
    let t = ch.dim();
    let mut sigma2 = SymMatrix::identity(t);
    for it in 1..=SIGMA_MAX_ITERS {
        let sigma1 = match conditional_cov(&g.a2, &sigma2) {
            Some(s) if is_pd(&s) => s,
            _ => return Ok(None),
        };
        let next2 = match conditional_cov(&g.a1, &sigma1) {
            Some(s) if is_pd(&s) => s,
            _ => return Ok(None),
        };
        let bound1 = match conditional_cov(&g.a2, &next2) {
            Some(b) => b,
            None => return Ok(None),
        };
        let viol1 = sigma1.sub(&bound1).max_eigenvalue().max(0.0);
        let viol2 = next2.sub(&conditional_cov(&g.a1, &sigma1).expect("checked above")).max_eigenvalue().max(0.0);
        let residual = viol1.max(viol2);
        if residual <= SIGMA_TOL {
            debug_assert!(schur_psd_exists(&g.a1, &sigma1).unwrap_or(false));
            return Ok(Some(SigmaPair { sigma1, sigma2: next2, residual, iterations: it }));
        }
        sigma2 = next2;
    }
    Ok(None)
}

/// Closed-form scalar noisy-interference test
/// `√a (1 + b P1) + √b (1 + a P2) ≤ 1`.
pub fn scalar_noisy(a: f64, b: f64, p1: f64, p2: f64) -> bool {
    scalar_noisy_lhs(a, b, p1, p2) <= 1.0
}

pub fn scalar_noisy_lhs(a: f64, b: f64, p1: f64, p2: f64) -> f64 {
    a.sqrt() * (1.0 + b * p1) + b.sqrt() * (1.0 + a * p2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    /// Named numeric certificates: eigenvalue margins of the Loewner tests
    /// and, when searched, the worst genie radius.
    pub certificates: BTreeMap<String, f64>,
    pub validation: ValidationReport,
    pub search: Option<NoisySearch>,
}

struct Orderings {
    h2_h4: PsdOrdering,
    h3_h1: PsdOrdering,
}

fn orderings(ch: &ChannelPair) -> Result<Orderings> {
    Ok(Orderings {
        h2_h4: psd_order_relative(&ch.gram(ch.h2()), &ch.gram(ch.h4()))?,
        h3_h1: psd_order_relative(&ch.gram(ch.h3()), &ch.gram(ch.h1()))?,
    })
}

/// Structural regime from the Loewner orderings alone, in decision order:
/// one-sided, strong, mixed (both orientations).
fn structural_label(v: &ValidationReport, o: &Orderings) -> Option<RegimeLabel> {
    if v.z_channel {
        if o.h2_h4.succeq() {
            return Some(RegimeLabel::ZStrong);
        }
        if o.h2_h4.prec() && v.invertible(1) {
            return Some(RegimeLabel::ZWeak);
        }
        return None;
    }
    if o.h2_h4.succeq() && o.h3_h1.succeq() {
        return Some(RegimeLabel::Strong);
    }
    if o.h2_h4.prec() && o.h3_h1.succeq() && v.invertible(1) {
        return Some(RegimeLabel::MixedRx2Strong);
    }
    if o.h3_h1.prec() && o.h2_h4.succeq() && v.invertible(2) {
        return Some(RegimeLabel::MixedRx1Strong);
    }
    None
}

/// Regime decided by the Loewner-order tests alone, without the noisy
/// covariance search. `None` when no structural regime applies.
pub fn structural_regime(ch: &ChannelPair) -> Result<Option<RegimeLabel>> {
    let validation = validate(ch);
    if !validation.invertible_h1_h4 {
        return Err(Error::SingularChannel { which: if validation.invertible(0) { "H4" } else { "H1" } });
    }
    Ok(structural_label(&validation, &orderings(ch)?))
}

/// Classifies a channel into the regime whose sum capacity is known.
pub fn classify(ch: &ChannelPair, cfg: &SearchConfig) -> Result<RegimeReport> {
    let validation = validate(ch);
    if !validation.invertible_h1_h4 {
        return Err(Error::SingularChannel { which: if validation.invertible(0) { "H4" } else { "H1" } });
    }
    let o = orderings(ch)?;
    let mut certificates = BTreeMap::new();
    certificates.insert("h2_minus_h4_min_eig".to_string(), o.h2_h4.min_eig_diff);
    certificates.insert("h2_minus_h4_max_eig".to_string(), o.h2_h4.max_eig_diff);
    certificates.insert("h3_minus_h1_min_eig".to_string(), o.h3_h1.min_eig_diff);
    certificates.insert("h3_minus_h1_max_eig".to_string(), o.h3_h1.max_eig_diff);

    if let Some(label) = structural_label(&validation, &o) {
        return Ok(RegimeReport { label, certificates, validation, search: None });
    }

    let search = noisy_global(ch, cfg)?;
    certificates.insert("worst_radius".to_string(), search.radius);
    certificates.insert("radius_margin".to_string(), 0.5 - search.radius);
    let label = if search.holds { RegimeLabel::Noisy } else { RegimeLabel::Unclassified };
    Ok(RegimeReport { label, certificates, validation, search: Some(search) })
}
