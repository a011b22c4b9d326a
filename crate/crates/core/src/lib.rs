pub mod cli;
pub mod conditions;
pub mod covariance;
pub mod error;
pub mod grid;
pub mod inference;
pub mod kernels;
pub mod levy;
pub mod montecarlo;
pub mod norms;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod variance;
