//! Exact and log-space numerics for Bell tests on amplified micro-macro
//! singlets of light measured with photon-number threshold detectors.

pub mod bell;
pub mod error;
pub mod loss;
pub mod macro_states;
mod nnls;
pub mod numeric;
pub mod oracle;

pub use error::{Error, Result};
