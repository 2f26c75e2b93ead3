pub mod error;
pub mod estimator;
pub mod inference;
pub mod kernel;
pub mod limit;
pub mod quadrature;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
