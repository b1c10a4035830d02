//! Energy-detection spectrum sensing with antenna reconfiguration.

pub mod detection;
pub mod error;
pub mod fusion;
pub mod montecarlo;
pub mod quad;
pub mod reconfig;
pub mod specfun;
pub mod thresholds;
pub mod tradeoff;

pub use error::{Error, Result};
