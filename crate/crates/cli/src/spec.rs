//! Channel and sweep description files.
//!
//! A channel file holds the two power budgets and exactly one channel table:
//!
//! ```toml
//! p1 = 1.0
//! p2 = 1.0
//!
//! [matrices]
//! dim = 2
//! h1 = [1.0, 0.0, 0.0, 1.0]   # row-major
//! h2 = [2.0, 0.0, 0.0, 2.0]
//! h3 = [2.0, 0.0, 0.0, 2.0]
//! h4 = [1.0, 0.0, 0.0, 1.0]
//! ```
//!
//! `[parallel]` takes per-subchannel gains `h1..h4` and `[scalar]` takes the
//! cross gains `a`, `b` of the unit-direct-gain scalar channel.

use iccap_core::{ChannelPair, Error as CoreError, ParallelGains};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixGains {
    pub dim: usize,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    pub h4: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarGains {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub p1: f64,
    pub p2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<MatrixGains>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<ParallelGains>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<ScalarGains>,
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
        let given = spec.matrices.is_some() as usize + spec.parallel.is_some() as usize + spec.scalar.is_some() as usize;
        if given != 1 {
            return Err(CliError::Parse(format!(
                "expected exactly one of [matrices], [parallel], [scalar], found {given}"
            )));
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("channel spec is always representable")
    }

    pub fn channel(&self) -> Result<ChannelPair, CliError> {
        let ch = match (&self.matrices, &self.parallel, &self.scalar) {
            (Some(m), _, _) => {
                let n = m.dim * m.dim;
                let mut hs = Vec::with_capacity(4);
                for (name, h) in [("h1", &m.h1), ("h2", &m.h2), ("h3", &m.h3), ("h4", &m.h4)] {
                    if h.len() != n {
                        return Err(CoreError::DimensionMismatch {
                            expected: format!("{n} entries for {name}"),
                            actual: h.len().to_string(),
                        }
                        .into());
                    }
                    hs.push(DMatrix::from_row_slice(m.dim, m.dim, h));
                }
                let [h1, h2, h3, h4]: [DMatrix<f64>; 4] = hs.try_into().expect("four matrices");
                ChannelPair::new(h1, h2, h3, h4, self.p1, self.p2)?
            }
            (None, Some(g), _) => iccap_core::channel::build_parallel(g, self.p1, self.p2)?,
            (None, None, Some(s)) => ChannelPair::scalar(s.a, s.b, self.p1, self.p2)?,
            (None, None, None) => return Err(CliError::Parse("no channel table".into())),
        };
        Ok(ch)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub a_from: f64,
    pub a_to: f64,
    pub a_steps: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { lambda1: 0.5, lambda2: 0.3, rho: 0.1, a_from: 0.0, a_to: 1.0, a_steps: 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub p1: f64,
    pub p2: f64,
    #[serde(default)]
    pub sweep: SweepSettings,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))
    }

    /// `a_steps + 1` evenly spaced values from `a_from` to `a_to`.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.sweep;
        if !s.a_from.is_finite() || !s.a_to.is_finite() || s.a_from < 0.0 || s.a_to < s.a_from {
            return Err(CoreError::InvalidInput(format!("bad sweep range [{}, {}]", s.a_from, s.a_to)).into());
        }
        if s.a_steps == 0 {
            return Ok(vec![s.a_from]);
        }
        Ok((0..=s.a_steps).map(|k| s.a_from + (s.a_to - s.a_from) * k as f64 / s.a_steps as f64).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_spec_parses_integers_as_reals() {
        let s = ChannelSpec::parse("p1 = 1\np2 = 2\n[scalar]\na = 0.04\nb = 0\n").unwrap();
        assert_eq!(s.scalar, Some(ScalarGains { a: 0.04, b: 0.0 }));
        assert_eq!(s.channel().unwrap().p2(), 2.0);
    }

    #[test]
    fn matrices_are_row_major() {
        let s = ChannelSpec::parse(
            "p1 = 1\np2 = 1\n[matrices]\ndim = 2\nh1 = [1, 2, 3, 4]\nh2 = [0, 0, 0, 0]\nh3 = [0, 0, 0, 0]\nh4 = [1, 0, 0, 1]\n",
        )
        .unwrap();
        let ch = s.channel().unwrap();
        assert_eq!(ch.h1()[(0, 1)], 2.0);
        assert_eq!(ch.h1()[(1, 0)], 3.0);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(ChannelSpec::parse("p1 = 1\np2 = 1\n"), Err(CliError::Parse(_))));
        assert!(matches!(
            ChannelSpec::parse("p1 = 1\np2 = 1\n[scalar]\na = 0\nb = 0\n[parallel]\nh1 = [1]\nh2 = [0]\nh3 = [0]\nh4 = [1]\n"),
            Err(CliError::Parse(_))
        ));
        assert!(matches!(ChannelSpec::parse("p1 = 1\np2 = 1\n[scalar]\na = 0\nb = 0\nc = 1\n"), Err(CliError::Parse(_))));
        let short = ChannelSpec::parse("p1 = 1\np2 = 1\n[matrices]\ndim = 2\nh1 = [1]\nh2 = [0]\nh3 = [0]\nh4 = [1]\n").unwrap();
        assert!(matches!(short.channel(), Err(CliError::Core(CoreError::DimensionMismatch { .. }))));
    }

    #[test]
    fn sweep_grid_endpoints() {
        let s = SweepSpec::parse("p1 = 1\np2 = 1\n[sweep]\na_to = 0.5\na_steps = 5\n").unwrap();
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[5], 0.5);
        assert_eq!(s.sweep.lambda1, 0.5);
    }
}
