//! Competitive ratios for i.i.d. prophet inequalities against top-ℓ benchmarks.

pub mod balayage;
pub mod error;
pub mod quad;
pub mod bvp;
pub mod crsolver;
pub mod multibvp;
pub mod simkit;
pub mod specfun;
pub mod staticthresh;

pub use error::{Error, Result};
