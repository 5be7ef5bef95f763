//! Sum capacity against a common interference scale `a` for
//! `H1 = H4 = I`, `H2 = H3 = √a·[[λ1, ρ], [ρ, λ2]]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelPair;
use crate::error::{Error, Result};
use crate::regime::{classify, RegimeLabel};

use super::{maximize_tan, OptConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTemplate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub p1: f64,
    pub p2: f64,
}

impl SweepTemplate {
    pub fn channel(&self, a: f64) -> Result<ChannelPair> {
        if !(a >= 0.0) {
            return Err(Error::InvalidInput(format!("interference scale must be nonnegative, got {a}")));
        }
        let s = a.sqrt();
        let cross = DMatrix::from_row_slice(2, 2, &[self.lambda1, self.rho, self.rho, self.lambda2]) * s;
        let eye = DMatrix::identity(2, 2);
        ChannelPair::new(eye.clone(), cross.clone(), cross, eye, self.p1, self.p2)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { lambda1: self.lambda1 * factor, lambda2: self.lambda2 * factor, rho: self.rho * factor, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub regime: RegimeLabel,
    /// Sum capacity, present only where the regime is noisy.
    pub c_nats: Option<f64>,
}

pub fn interference_sweep(template: &SweepTemplate, a_grid: &[f64], cfg: &OptConfig) -> Result<Vec<SweepRow>> {
    a_grid
        .iter()
        .map(|&a| {
            let ch = template.channel(a)?;
            let regime = classify(&ch, &cfg.search)?.label;
            let c_nats = if regime == RegimeLabel::Noisy { Some(maximize_tan(&ch, cfg)?.sum_rate_nats) } else { None };
            Ok(SweepRow { a, regime, c_nats })
        })
        .collect()
}
