pub mod distribution;
pub mod elicitation;
pub mod error;
pub mod functionals;
pub mod io;
pub mod prediction_space;
pub mod scoring;
pub mod selftest;

pub use distribution::{BivariateDiscreteDistribution, DiscreteDistribution, ProbeResult};
pub use error::{Error, Result};
