use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::benchmarks::{weights_emw, weights_gmv, GmvMode};
use super::metrics::{intensity_metrics, performance_metrics, PerformanceMetrics};
use super::{BacktestConfig, Strategy};
use crate::error::{EapoError, Result};
use crate::estimation::{ledoit_wolf, ShrinkageTarget};
use crate::penalty::{
    emissions_adjusted_mean, lipschitz_constants, mean_abs_returns, PenaltyParams,
};
use crate::solver::{solve_robust_mv, SolverConfig};
use crate::types::{IntensityPanel, IntensityVector, PricePanel, Scope, WeightVector};

/// State at one rebalance and the holding period that follows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalanceRecord {
    pub date: NaiveDate,
    pub price_index: usize,
    /// Target weights after trading.
    pub weights: Vec<f64>,
    /// Drifted holdings just before trading (all zero at the first rebalance).
    pub pre_trade: Vec<f64>,
    /// `‖x − x⁻‖₁`.
    pub turnover: f64,
    /// Fraction of wealth paid in costs.
    pub cost: f64,
    /// Point intensities used for the footprint.
    pub intensities: Vec<f64>,
    /// Portfolio intensity `Λ` over the holding period.
    pub intensity: f64,
    /// Compounded net return until the next rebalance (inclusive of its cost).
    pub period_return: f64,
    pub emissions_yield: Option<f64>,
    pub solver_iterations: Option<usize>,
    pub solver_converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub strategy: Strategy,
    pub scope: Scope,
    pub tickers: Vec<String>,
    /// Dates of `net_returns`, starting the day after the first rebalance.
    pub dates: Vec<NaiveDate>,
    pub net_returns: Vec<f64>,
    /// Wealth at the first rebalance (after its cost) followed by one value per date.
    pub wealth: Vec<f64>,
    pub rebalances: Vec<RebalanceRecord>,
    pub average_intensity: f64,
    pub metrics: PerformanceMetrics,
    /// Leading rebalance dates dropped for lack of history.
    pub skipped_rebalances: usize,
}

impl BacktestReport {
    pub fn turnover(&self) -> Vec<f64> {
        self.rebalances.iter().map(|r| r.turnover).collect()
    }

    pub fn weight_panel(&self) -> Vec<DVector<f64>> {
        self.rebalances
            .iter()
            .map(|r| DVector::from_column_slice(&r.weights))
            .collect()
    }

    pub fn intensity_path(&self) -> Vec<f64> {
        self.rebalances.iter().map(|r| r.intensity).collect()
    }

    pub fn yield_path(&self) -> Vec<Option<f64>> {
        self.rebalances.iter().map(|r| r.emissions_yield).collect()
    }
}

struct Target {
    weights: DVector<f64>,
    iterations: Option<usize>,
    converged: Option<bool>,
}

fn expand(active: &[usize], n: usize, sub: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (k, &i) in active.iter().enumerate() {
        out[i] = sub[k];
    }
    out
}

fn restrict(active: &[usize], x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(active.len(), active.iter().map(|&i| x[i]))
}

#[allow(clippy::too_many_arguments)]
fn target_weights(
    strategy: Strategy,
    window: &DMatrix<f64>,
    panel: &IntensityPanel,
    row: usize,
    active: &[usize],
    previous: Option<&DVector<f64>>,
    solver: &SolverConfig,
    n: usize,
) -> Result<Target> {
    let plain = |w: WeightVector| Target {
        weights: expand(active, n, w.as_vector()),
        iterations: None,
        converged: None,
    };
    match strategy {
        Strategy::Ew => Ok(plain(WeightVector::equal(active.len()))),
        Strategy::GmvInvvar | Strategy::GmvFull => {
            let sigma = ledoit_wolf(window, ShrinkageTarget::ConstantCorrelation)?.sigma_hat;
            let mode = if strategy == Strategy::GmvFull {
                GmvMode::Full
            } else {
                GmvMode::InverseVariance
            };
            Ok(plain(weights_gmv(&sigma, mode)?))
        }
        Strategy::Emw => {
            let g: Vec<Option<f64>> = active.iter().map(|&i| panel.emissions[row][i]).collect();
            Ok(plain(weights_emw(&g)?))
        }
        Strategy::Eapo => {
            let params = PenaltyParams::new(solver.m, panel.scope)?;
            let mut mu_e = DVector::zeros(active.len());
            for draw in &panel.draws {
                let lam =
                    DVector::from_iterator(active.len(), active.iter().map(|&i| draw[(row, i)]));
                mu_e += emissions_adjusted_mean(
                    window,
                    &IntensityVector::new(lam, panel.scope)?,
                    params,
                )?;
            }
            mu_e /= panel.draws.len() as f64;
            let sigma = ledoit_wolf(window, ShrinkageTarget::ConstantCorrelation)?.sigma_hat;
            let l = if solver.absorb_lipschitz {
                None
            } else {
                let point = panel.point();
                let lmax = active.iter().map(|&i| point[(row, i)]).fold(0.0, f64::max);
                lipschitz_constants(&mean_abs_returns(window), lmax, solver.m).ok()
            };
            // Warm start and turnover reference are the previous targets, never the drifted holdings.
            let warm = previous
                .map(|p| restrict(active, p))
                .filter(|p| p.sum() > 0.0)
                .map(|p| WeightVector::new(&p / p.sum()))
                .transpose()?;
            let cfg = SolverConfig {
                turnover_cap: if warm.is_some() {
                    solver.turnover_cap
                } else {
                    None
                },
                ..solver.clone()
            };
            let start = warm.unwrap_or_else(|| WeightVector::equal(active.len()));
            let (x, diag) = solve_robust_mv(&mu_e, &sigma, l.as_ref(), &cfg, &start)?;
            Ok(Target {
                weights: expand(active, n, x.as_vector()),
                iterations: Some(diag.iterations),
                converged: Some(diag.converged),
            })
        }
    }
}

/// Rolling backtest rebalanced on the intensity panel's dates.
///
/// At a rebalance on price index `d` the estimation window is the `lookback`
/// returns ending at `d − 1`, so neither the day-`d` price nor anything later
/// is used. Trades happen at the close of `d` and earn from `d + 1`.
/// Holdings drift with prices between rebalances. The first rebalance buys
/// from cash, so its turnover is one.
pub fn run_backtest(
    prices: &PricePanel,
    intensities: &IntensityPanel,
    cfg: &BacktestConfig,
) -> Result<BacktestReport> {
    cfg.validate()?;
    if prices.tickers != intensities.tickers {
        return Err(EapoError::Alignment(
            "price and intensity panels list different tickers".into(),
        ));
    }
    let n = prices.n_assets();
    let returns = prices.returns()?.values;
    let last = prices.n_dates() - 1;

    let mut schedule = Vec::new();
    let mut skipped = 0;
    for (row, date) in intensities.dates.iter().enumerate() {
        let d = prices.dates.binary_search(date).map_err(|_| {
            EapoError::Alignment(format!("rebalance date {date} is not a trading day"))
        })?;
        if d < cfg.lookback + 1 {
            skipped += 1;
            continue;
        }
        if d < last {
            schedule.push((row, d));
        }
    }
    if skipped > 0 {
        log::warn!(
            "skipped {skipped} leading rebalance dates with fewer than {} prior returns",
            cfg.lookback
        );
    }
    let Some(&(_, d0)) = schedule.first() else {
        return Err(EapoError::InsufficientData(
            "no rebalance date has enough price history".into(),
        ));
    };

    let c = cfg.cost_bps * 1e-4;
    let point = intensities.point();
    let mut holdings = DVector::zeros(n);
    let mut previous: Option<DVector<f64>> = None;
    let mut wealth = vec![1.0];
    let mut net_returns = Vec::with_capacity(last - d0);
    let mut rebalances: Vec<RebalanceRecord> = Vec::with_capacity(schedule.len());
    let mut period_start_wealth = Vec::with_capacity(schedule.len());
    let mut next = 0;

    for d in d0..=last {
        let w_prev = *wealth.last().expect("nonempty");
        let mut w = w_prev;
        if d > d0 {
            let r = returns.row(d - 1).transpose();
            let gross = holdings.dot(&r);
            if !(gross.is_finite() && gross > 0.0) {
                return Err(EapoError::Numerical(format!(
                    "portfolio gross return {gross} on day {d}"
                )));
            }
            w *= gross;
            holdings = holdings.component_mul(&r) / gross;
        }
        if next < schedule.len() && schedule[next].1 == d {
            let row = schedule[next].0;
            let active: Vec<usize> = intensities
                .active(row)
                .iter()
                .enumerate()
                .filter(|(_, a)| **a)
                .map(|(i, _)| i)
                .collect();
            if active.is_empty() {
                return Err(EapoError::InsufficientData(format!(
                    "no investable asset on {}",
                    intensities.dates[row]
                )));
            }
            let window = DMatrix::from_fn(cfg.lookback, active.len(), |t, k| {
                returns[(d - 1 - cfg.lookback + t, active[k])]
            });
            let target = target_weights(
                cfg.strategy,
                &window,
                intensities,
                row,
                &active,
                previous.as_ref(),
                &cfg.solver,
                n,
            )?;
            let turnover = (&target.weights - &holdings).lp_norm(1);
            let cost = c * turnover;
            w *= 1.0 - cost;
            let lam = point.row(row).transpose();
            rebalances.push(RebalanceRecord {
                date: prices.dates[d],
                price_index: d,
                weights: target.weights.iter().copied().collect(),
                pre_trade: holdings.iter().copied().collect(),
                turnover,
                cost,
                intensities: lam.iter().copied().collect(),
                intensity: target.weights.dot(&lam),
                period_return: 0.0,
                emissions_yield: None,
                solver_iterations: target.iterations,
                solver_converged: target.converged,
            });
            period_start_wealth.push(w);
            holdings = target.weights.clone();
            previous = Some(target.weights);
            next += 1;
        }
        if d == d0 {
            wealth[0] = w;
        } else {
            net_returns.push(w / w_prev - 1.0);
            wealth.push(w);
        }
    }

    let final_wealth = *wealth.last().expect("nonempty");
    for k in 0..rebalances.len() {
        let end = period_start_wealth
            .get(k + 1)
            .copied()
            .unwrap_or(final_wealth);
        rebalances[k].period_return = end / period_start_wealth[k] - 1.0;
    }
    let im = intensity_metrics(
        &rebalances
            .iter()
            .map(|r| DVector::from_column_slice(&r.weights))
            .collect::<Vec<_>>(),
        &rebalances
            .iter()
            .map(|r| DVector::from_column_slice(&r.intensities))
            .collect::<Vec<_>>(),
        &rebalances
            .iter()
            .map(|r| r.period_return)
            .collect::<Vec<_>>(),
    )?;
    for (r, y) in rebalances.iter_mut().zip(im.yield_path) {
        r.emissions_yield = y;
    }
    let metrics = performance_metrics(&net_returns, cfg.annualization)?;
    Ok(BacktestReport {
        strategy: cfg.strategy,
        scope: intensities.scope,
        tickers: prices.tickers.clone(),
        dates: prices.dates[d0 + 1..].to_vec(),
        net_returns,
        wealth,
        rebalances,
        average_intensity: im.average_intensity,
        metrics,
        skipped_rebalances: skipped,
    })
}
