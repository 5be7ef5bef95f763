//! Sum-capacity and regime analysis for two-user Gaussian MIMO interference
//! channels.

pub mod channel;
pub mod error;
pub mod matrix;
pub mod optimizer;
pub mod regime;
pub mod riccati;
mod starts;

pub use channel::{validate, ChannelPair, CovariancePair, ParallelGains};
pub use error::{Error, Result};
pub use matrix::{GenMatrix, SymMatrix};
pub use regime::{classify, RegimeLabel, RegimeReport, SearchConfig};
