//! Autocorrelation-robust tests of mean return differences and bootstrap
//! intervals for Sharpe-ratio differences.

mod bootstrap;
mod hac;

pub use bootstrap::{annualized_sharpe, block_bootstrap_sharpe, BootstrapResult};
pub use hac::{newey_west, pairwise_return_tests, HacResult, PairwiseTest};
