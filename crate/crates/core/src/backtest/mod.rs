//! Monthly rebalancing backtests with proportional costs, plus the benchmark
//! strategies and the performance, footprint, attribution and style summaries.

mod attribution;
mod benchmarks;
mod engine;
mod metrics;
mod style;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EapoError, Result};
use crate::solver::SolverConfig;

pub use attribution::{attribution, attribution_over_time, Attribution};
pub use benchmarks::{weights_emw, weights_ew, weights_gmv, GmvMode};
pub use engine::{run_backtest, BacktestReport, RebalanceRecord};
pub use metrics::{
    intensity_metrics, performance_metrics, tracking, IntensityMetrics, PerformanceMetrics,
    Tracking,
};
pub use style::{style_at, style_diagnostics, StyleExposure, MOMENTUM_SKIP, STYLE_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Ew,
    GmvInvvar,
    GmvFull,
    Emw,
    Eapo,
}

impl Strategy {
    /// The strategies run by `--strategy all`.
    pub const ALL: [Strategy; 4] = [
        Strategy::Ew,
        Strategy::GmvInvvar,
        Strategy::Emw,
        Strategy::Eapo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ew => "ew",
            Strategy::GmvInvvar => "gmv_invvar",
            Strategy::GmvFull => "gmv_full",
            Strategy::Emw => "emw",
            Strategy::Eapo => "eapo",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Strategy {
    type Err = EapoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ew" => Ok(Strategy::Ew),
            "gmv" | "gmv_invvar" => Ok(Strategy::GmvInvvar),
            "gmv_full" => Ok(Strategy::GmvFull),
            "emw" => Ok(Strategy::Emw),
            "eapo" => Ok(Strategy::Eapo),
            other => Err(EapoError::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

fn default_lookback() -> usize {
    252
}
fn default_cost_bps() -> f64 {
    2.0
}
fn default_annualization() -> f64 {
    252.0
}
fn default_strategy() -> Strategy {
    Strategy::Eapo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    #[serde(default = "default_lookback")]
    pub lookback: usize,
    #[serde(default = "default_cost_bps")]
    pub cost_bps: f64,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_annualization")]
    pub annualization: f64,
    #[serde(skip)]
    pub solver: SolverConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            lookback: default_lookback(),
            cost_bps: default_cost_bps(),
            strategy: default_strategy(),
            annualization: default_annualization(),
            solver: SolverConfig::default(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback < 2 {
            return Err(EapoError::Config(format!(
                "lookback must be at least 2, got {}",
                self.lookback
            )));
        }
        if !(self.cost_bps.is_finite() && self.cost_bps >= 0.0) {
            return Err(EapoError::Config(format!(
                "cost_bps must be >= 0, got {}",
                self.cost_bps
            )));
        }
        if !(self.annualization.is_finite() && self.annualization > 0.0) {
            return Err(EapoError::Config(format!(
                "annualization must be positive, got {}",
                self.annualization
            )));
        }
        self.solver.validate()
    }
}
