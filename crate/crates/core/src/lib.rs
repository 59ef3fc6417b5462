pub mod amplitude;
pub mod baselines;
pub mod bessel;
pub mod error;
pub mod field;
pub mod quadrature;
pub mod rate;
pub mod units;
pub mod volkov;

pub use error::{Error, Result};
