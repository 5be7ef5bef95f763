//! The two-user channel `y1 = H1 x1 + H2 x2 + z1`, `y2 = H3 x1 + H4 x2 + z2`
//! with unit-covariance Gaussian noise at both receivers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{is_pd, logdet_pd, pd_tolerance, singular_extremes, GenMatrix, SymMatrix};

/// Invertibility threshold on `σ_min / σ_max`.
pub const INVERTIBLE_RATIO: f64 = 1e-10;

/// Entries of `H3` at or below this magnitude make the channel one-sided.
pub const Z_CHANNEL_TOL: f64 = 1e-12;

/// Slack allowed on the trace budget of a covariance.
pub const TRACE_SLACK: f64 = 1e-9;

/// Per-subchannel gains of a parallel (diagonal) channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelGains {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    pub h4: Vec<f64>,
}

impl ParallelGains {
    pub fn len(&self) -> usize {
        self.h1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h1.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPair {
    h1: GenMatrix,
    h2: GenMatrix,
    h3: GenMatrix,
    h4: GenMatrix,
    p1: f64,
    p2: f64,
    parallel: Option<ParallelGains>,
}

impl ChannelPair {
    pub fn new(h1: GenMatrix, h2: GenMatrix, h3: GenMatrix, h4: GenMatrix, p1: f64, p2: f64) -> Result<Self> {
        let t = h1.nrows();
        if t == 0 {
            return Err(Error::InvalidInput("channel dimension must be at least 1".into()));
        }
        for (name, h) in [("H1", &h1), ("H2", &h2), ("H3", &h3), ("H4", &h4)] {
            if h.nrows() != t || h.ncols() != t {
                return Err(Error::DimensionMismatch {
                    expected: format!("{t}x{t} for {name}"),
                    actual: format!("{}x{}", h.nrows(), h.ncols()),
                });
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
            }
        }
        for (name, p) in [("P1", p1), ("P2", p2)] {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be a finite non-negative power, got {p}")));
            }
        }
        Ok(Self { h1, h2, h3, h4, p1, p2, parallel: None })
    }

    /// Scalar channel with `h1 = h4 = 1`, `h2 = √a`, `h3 = √b`.
    pub fn scalar(a: f64, b: f64, p1: f64, p2: f64) -> Result<Self> {
        if a < 0.0 || b < 0.0 {
            return Err(Error::InvalidInput("cross gains a, b must be non-negative".into()));
        }
        build_parallel(
            &ParallelGains { h1: vec![1.0], h2: vec![a.sqrt()], h3: vec![b.sqrt()], h4: vec![1.0] },
            p1,
            p2,
        )
    }

    pub fn dim(&self) -> usize {
        self.h1.nrows()
    }

    pub fn h1(&self) -> &GenMatrix {
        &self.h1
    }

    pub fn h2(&self) -> &GenMatrix {
        &self.h2
    }

    pub fn h3(&self) -> &GenMatrix {
        &self.h3
    }

    pub fn h4(&self) -> &GenMatrix {
        &self.h4
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn power(&self, user: usize) -> f64 {
        if user == 0 {
            self.p1
        } else {
            self.p2
        }
    }

    pub fn parallel_gains(&self) -> Option<&ParallelGains> {
        self.parallel.as_ref()
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel.is_some()
    }

    /// Same channel with new power budgets.
    pub fn with_powers(&self, p1: f64, p2: f64) -> Result<Self> {
        let mut out = Self::new(self.h1.clone(), self.h2.clone(), self.h3.clone(), self.h4.clone(), p1, p2)?;
        out.parallel = self.parallel.clone();
        Ok(out)
    }

    /// Relabels the users: user 1 becomes user 2 and vice versa.
    pub fn swapped(&self) -> Self {
        Self {
            h1: self.h4.clone(),
            h2: self.h3.clone(),
            h3: self.h2.clone(),
            h4: self.h1.clone(),
            p1: self.p2,
            p2: self.p1,
            parallel: self.parallel.as_ref().map(|g| ParallelGains {
                h1: g.h4.clone(),
                h2: g.h3.clone(),
                h3: g.h2.clone(),
                h4: g.h1.clone(),
            }),
        }
    }

    /// `Hᵀ H` for each channel matrix.
    pub fn gram(&self, h: &GenMatrix) -> SymMatrix {
        SymMatrix::symmetrize(h.transpose() * h)
    }
}

/// Input covariances of the two transmitters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariancePair {
    pub s1: SymMatrix,
    pub s2: SymMatrix,
}

impl CovariancePair {
    pub fn new(s1: SymMatrix, s2: SymMatrix) -> Self {
        Self { s1, s2 }
    }

    pub fn zero(t: usize) -> Self {
        Self { s1: SymMatrix::zeros(t), s2: SymMatrix::zeros(t) }
    }

    /// `S_i = (P_i / t) I`
    pub fn isotropic(ch: &ChannelPair) -> Self {
        let t = ch.dim();
        Self {
            s1: SymMatrix::scaled_identity(t, ch.p1() / t as f64),
            s2: SymMatrix::scaled_identity(t, ch.p2() / t as f64),
        }
    }

    pub fn get(&self, user: usize) -> &SymMatrix {
        if user == 0 {
            &self.s1
        } else {
            &self.s2
        }
    }

    /// PSD within the relative tolerance and trace within budget.
    pub fn is_feasible(&self, ch: &ChannelPair) -> bool {
        [(&self.s1, ch.p1()), (&self.s2, ch.p2())].iter().all(|(s, p)| {
            s.dim() == ch.dim()
                && s.min_eigenvalue() >= -pd_tolerance(s.spectral_radius().max(*p))
                && s.trace() <= p + TRACE_SLACK
        })
    }

    pub fn swapped(&self) -> Self {
        Self { s1: self.s2.clone(), s2: self.s1.clone() }
    }
}

/// Structural checks on a channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub square: bool,
    pub invertible_h1_h4: bool,
    pub invertible_h2_h3: bool,
    /// `σ_max / σ_min` of H1..H4 (infinite when singular).
    pub condition_numbers: [f64; 4],
    pub z_channel: bool,
}

impl ValidationReport {
    pub fn invertible(&self, index: usize) -> bool {
        self.condition_numbers[index] < 1.0 / INVERTIBLE_RATIO
    }
}

pub fn validate(ch: &ChannelPair) -> ValidationReport {
    let mats = [ch.h1(), ch.h2(), ch.h3(), ch.h4()];
    let mut cond = [0.0; 4];
    for (c, h) in cond.iter_mut().zip(mats) {
        let (min, max) = singular_extremes(h);
        *c = if max == 0.0 || min <= INVERTIBLE_RATIO * max { f64::INFINITY } else { max / min };
    }
    let inv = |c: f64| c < 1.0 / INVERTIBLE_RATIO;
    ValidationReport {
        square: mats.iter().all(|h| h.is_square()),
        invertible_h1_h4: inv(cond[0]) && inv(cond[3]),
        invertible_h2_h3: inv(cond[1]) && inv(cond[2]),
        condition_numbers: cond,
        z_channel: ch.h3().iter().all(|v| v.abs() <= Z_CHANNEL_TOL),
    }
}

/// Genie correlations of the noisy-interference converse at one covariance
/// pair.
///
/// `m1`/`w1` enter the Riccati equation for `X = Σ1 − A1ᵀA1` and `m2`/`w2`
/// the mirrored one for `Σ2 − A2ᵀA2`:
///
/// ```text
/// M1 = I − A1ᵀA1 − A2A2ᵀ,   W1 = A1ᵀA2ᵀ
/// M2 = I − A1A1ᵀ − A2ᵀA2,   W2 = A2ᵀA1ᵀ
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct GenieMatrices {
    pub a1: GenMatrix,
    pub a2: GenMatrix,
    pub w1: GenMatrix,
    pub w2: GenMatrix,
    pub m1: SymMatrix,
    pub m2: SymMatrix,
    pub m1_min_eig: f64,
    pub m2_min_eig: f64,
}

impl GenieMatrices {
    pub fn m1_pd(&self) -> bool {
        is_pd(&self.m1)
    }

    pub fn m2_pd(&self) -> bool {
        is_pd(&self.m2)
    }
}

fn inverse_transpose(h: &GenMatrix, which: &'static str) -> Result<GenMatrix> {
    let (min, max) = singular_extremes(h);
    if max == 0.0 || min <= INVERTIBLE_RATIO * max {
        return Err(Error::SingularChannel { which });
    }
    h.clone().try_inverse().map(|m| m.transpose()).ok_or(Error::SingularChannel { which })
}

/// `A1 = (I + H2 S2 H2ᵀ) H1^{−T} H3ᵀ`, `A2 = (I + H3 S1 H3ᵀ) H4^{−T} H2ᵀ`
/// and the derived `M`, `W` matrices.
pub fn genie_matrices(ch: &ChannelPair, cov: &CovariancePair) -> Result<GenieMatrices> {
    let t = ch.dim();
    let eye = DMatrix::<f64>::identity(t, t);
    let h1_it = inverse_transpose(ch.h1(), "H1")?;
    let h4_it = inverse_transpose(ch.h4(), "H4")?;
    let k1 = &eye + cov.s2.congruence(ch.h2()).as_matrix();
    let k2 = &eye + cov.s1.congruence(ch.h3()).as_matrix();
    let a1 = k1 * h1_it * ch.h3().transpose();
    let a2 = k2 * h4_it * ch.h2().transpose();
    let a1t = a1.transpose();
    let a2t = a2.transpose();
    let w1 = &a1t * &a2t;
    let w2 = &a2t * &a1t;
    let m1 = SymMatrix::symmetrize(&eye - &a1t * &a1 - &a2 * &a2t);
    let m2 = SymMatrix::symmetrize(&eye - &a1 * &a1t - &a2t * &a2);
    let m1_min_eig = m1.min_eigenvalue();
    let m2_min_eig = m2.min_eigenvalue();
    Ok(GenieMatrices { a1, a2, w1, w2, m1, m2, m1_min_eig, m2_min_eig })
}

/// Treat-as-noise rates `(R1, R2)` in nats:
/// `R1 = ½ log|I + H1 S1 H1ᵀ (I + H2 S2 H2ᵀ)^{-1}|` and symmetrically for `R2`.
pub fn tan_rates(ch: &ChannelPair, cov: &CovariancePair) -> Result<(f64, f64)> {
    let t = ch.dim();
    let eye = SymMatrix::identity(t);
    let own1 = cov.s1.congruence(ch.h1());
    let int1 = cov.s2.congruence(ch.h2());
    let own2 = cov.s2.congruence(ch.h4());
    let int2 = cov.s1.congruence(ch.h3());
    let n1 = eye.add(&int1);
    let n2 = eye.add(&int2);
    let r1 = 0.5 * (logdet_pd(&n1.add(&own1))? - logdet_pd(&n1)?);
    let r2 = 0.5 * (logdet_pd(&n2.add(&own2))? - logdet_pd(&n2)?);
    Ok((r1, r2))
}

/// Diagonal channel `H_j = diag(h_j1, …, h_jt)`.
pub fn build_parallel(gains: &ParallelGains, p1: f64, p2: f64) -> Result<ChannelPair> {
    let t = gains.h1.len();
    if t == 0 {
        return Err(Error::InvalidInput("parallel channel needs at least one subchannel".into()));
    }
    for (name, g) in [("h2", &gains.h2), ("h3", &gains.h3), ("h4", &gains.h4)] {
        if g.len() != t {
            return Err(Error::DimensionMismatch {
                expected: format!("{t} gains for {name}"),
                actual: g.len().to_string(),
            });
        }
    }
    let diag = |g: &[f64]| DMatrix::from_fn(t, t, |i, j| if i == j { g[i] } else { 0.0 });
    let mut ch = ChannelPair::new(diag(&gains.h1), diag(&gains.h2), diag(&gains.h3), diag(&gains.h4), p1, p2)?;
    ch.parallel = Some(gains.clone());
    Ok(ch)
}
