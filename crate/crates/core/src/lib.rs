//! Emissions-aware robust portfolio optimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`penalty`]: the intensity penalty operator on gross returns.
//! * [`ambiguity`]: norm-ball ambiguity sets around estimated intensities.
//! * [`estimation`]: shrinkage covariance, rolling means and imputation.
//! * [`solver`]: robust mean-variance problems on the simplex.
//! * [`risk`]: CVaR and phi-divergence robust means.
//! * [`frontier`]: return/intensity frontiers and a tiny robust Bellman recursion.
//! * [`backtest`]: monthly rebalancing engine, benchmarks and metrics.
//! * [`inference`]: HAC tests and block-bootstrap Sharpe intervals.
//! * [`data`]: CSV schemas, alignment, synthetic data and the CLI plumbing.

pub mod ambiguity;
pub mod backtest;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimation;
pub mod frontier;
pub mod inference;
mod linalg;
pub mod penalty;
pub mod risk;
pub mod solver;
pub mod types;

pub use error::{EapoError, Result};
pub use types::{
    IntensityPanel, IntensityStatus, IntensityVector, PricePanel, ReturnsPanel, Scope, WeightVector,
};
