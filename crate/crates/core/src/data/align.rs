use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Duration, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::records::RawRecords;
use crate::error::{EapoError, Result};
use crate::estimation::{impute_emissions, EmissionsObservations};
use crate::types::{month_end_indices, IntensityPanel, IntensityStatus, PricePanel, Scope};

pub const UNKNOWN_SECTOR: &str = "UNKNOWN";

fn default_draws() -> usize {
    crate::estimation::DEFAULT_DRAWS
}
fn default_scope() -> Scope {
    Scope::One
}

/// How missing intensities are treated and when disclosures become usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_scope")]
    pub scope: Scope,
    /// Exclude assets without a usable disclosure instead of imputing them.
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_draws")]
    pub imputation_draws: usize,
    /// Days after fiscal year end before that year's emissions may be used.
    #[serde(default)]
    pub disclosure_lag_days: u32,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            scope: default_scope(),
            strict: false,
            imputation_draws: default_draws(),
            disclosure_lag_days: 0,
        }
    }
}

/// Prices, intensities at rebalance dates, and how every entry was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    pub prices: PricePanel,
    pub intensities: IntensityPanel,
    /// Sector per ticker, [`UNKNOWN_SECTOR`] when unmapped.
    pub sectors: Vec<String>,
    /// Fiscal year carried forward at each (rebalance, asset), if any.
    pub fiscal_year: Vec<Vec<Option<i32>>>,
    /// True where fewer than four revenue quarters were available and the sum was annualized.
    pub revenue_annualized: Vec<Vec<bool>>,
    /// Tickers dropped for incomplete price coverage.
    pub dropped_tickers: Vec<String>,
}

/// Price panel over the union calendar, keeping only tickers priced on every date.
pub fn price_panel(raw: &RawRecords) -> Result<(PricePanel, Vec<String>)> {
    let dates: BTreeSet<NaiveDate> = raw.prices.iter().map(|p| p.date).collect();
    let mut by_ticker: BTreeMap<&str, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for p in &raw.prices {
        by_ticker
            .entry(&p.ticker)
            .or_default()
            .push((p.date, p.adjusted_close));
    }
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let mut tickers = Vec::new();
    let mut dropped = Vec::new();
    let mut columns = Vec::new();
    for (t, mut rows) in by_ticker {
        if rows.len() != dates.len() {
            log::warn!(
                "dropping {t}: priced on {} of {} dates",
                rows.len(),
                dates.len()
            );
            dropped.push(t.to_string());
            continue;
        }
        rows.sort_by_key(|r| r.0);
        tickers.push(t.to_string());
        columns.push(rows.into_iter().map(|r| r.1).collect::<Vec<f64>>());
    }
    if tickers.is_empty() {
        return Err(EapoError::InsufficientData(
            "no ticker has complete price coverage".into(),
        ));
    }
    let values = DMatrix::from_fn(dates.len(), tickers.len(), |d, i| columns[i][d]);
    Ok((PricePanel::new(dates, tickers, values)?, dropped))
}

/// Last trading day of each month in the price calendar.
pub fn rebalance_calendar(prices: &PricePanel) -> Vec<NaiveDate> {
    month_end_indices(&prices.dates)
        .into_iter()
        .map(|i| prices.dates[i])
        .collect()
}

fn fiscal_year_end(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date")
}

/// Trailing revenue at `reference` in $mm: the latest four quarters ending on or before it.
///
/// With fewer quarters the sum is scaled by `4 / count`; the flag reports that case.
pub fn ttm_revenue_mm(quarters: &[(NaiveDate, f64)], reference: NaiveDate) -> Option<(f64, bool)> {
    let mut usable: Vec<&(NaiveDate, f64)> = quarters.iter().filter(|q| q.0 <= reference).collect();
    usable.sort_by_key(|q| q.0);
    let take: Vec<f64> = usable.iter().rev().take(4).map(|q| q.1).collect();
    if take.is_empty() {
        return None;
    }
    let sum: f64 = take.iter().sum();
    let annualized = take.len() < 4;
    let total = if annualized {
        sum * 4.0 / take.len() as f64
    } else {
        sum
    };
    Some((total / 1e6, annualized))
}

/// Intensities `λ = C / TTM revenue` forward-carried to each rebalance date.
///
/// Fiscal year `Y` is usable at date `t` when `Y-12-31 + lag < t`. Missing
/// entries are imputed per date with seed `seed + row`, or excluded in strict mode.
pub fn align_forward_carry(
    raw: &RawRecords,
    cfg: &DataConfig,
    rebalance_dates: &[NaiveDate],
    seed: u64,
) -> Result<AlignedDataset> {
    if rebalance_dates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EapoError::InvalidInput(
            "rebalance dates must be strictly increasing".into(),
        ));
    }
    if cfg.imputation_draws == 0 {
        return Err(EapoError::Config(
            "imputation_draws must be at least 1".into(),
        ));
    }
    let (prices, dropped_tickers) = price_panel(raw)?;
    let tickers = prices.tickers.clone();
    let n = tickers.len();
    let sector_map: HashMap<&str, &str> = raw
        .sectors
        .iter()
        .map(|s| (s.ticker.as_str(), s.sector.as_str()))
        .collect();
    let sectors: Vec<String> = tickers
        .iter()
        .map(|t| {
            sector_map
                .get(t.as_str())
                .map_or(UNKNOWN_SECTOR, |s| s)
                .to_string()
        })
        .collect();

    let mut disclosures: HashMap<&str, Vec<(i32, f64)>> = HashMap::new();
    for e in raw.emissions.iter().filter(|e| e.scope == cfg.scope) {
        disclosures
            .entry(&e.ticker)
            .or_default()
            .push((e.fiscal_year, e.tco2e));
    }
    for v in disclosures.values_mut() {
        v.sort_by_key(|d| d.0);
    }
    let mut quarters: HashMap<&str, Vec<(NaiveDate, f64)>> = HashMap::new();
    for r in &raw.revenues {
        quarters
            .entry(&r.ticker)
            .or_default()
            .push((r.quarter_end, r.revenue_usd));
    }
    let lag = Duration::days(cfg.disclosure_lag_days as i64);

    let t = rebalance_dates.len();
    let k = cfg.imputation_draws;
    let mut draws = vec![DMatrix::zeros(t, n); k];
    let mut status = vec![vec![IntensityStatus::Observed; n]; t];
    let mut emissions = vec![vec![None; n]; t];
    let mut fiscal_year = vec![vec![None; n]; t];
    let mut revenue_annualized = vec![vec![false; n]; t];

    for (row, &date) in rebalance_dates.iter().enumerate() {
        let mut c_obs = vec![None; n];
        let mut s_obs = vec![None; n];
        for (i, ticker) in tickers.iter().enumerate() {
            let latest = disclosures.get(ticker.as_str()).and_then(|v| {
                v.iter()
                    .rev()
                    .find(|(y, _)| fiscal_year_end(*y) + lag < date)
            });
            let reference = latest.map_or(date - Duration::days(1), |(y, _)| fiscal_year_end(*y));
            if let Some((rev, ann)) = quarters
                .get(ticker.as_str())
                .and_then(|q| ttm_revenue_mm(q, reference.min(date - Duration::days(1))))
            {
                s_obs[i] = Some(rev);
                revenue_annualized[row][i] = ann;
            }
            if let Some(&(y, c)) = latest {
                fiscal_year[row][i] = Some(y);
                emissions[row][i] = Some(c);
                c_obs[i] = Some(c);
            }
        }
        let complete: Vec<bool> = (0..n)
            .map(|i| c_obs[i].is_some() && s_obs[i].is_some())
            .collect();
        // Zero emissions give a zero intensity directly; the log-normal model only sees positive values.
        let positive = |v: &Option<f64>| v.filter(|x| *x > 0.0);
        let needs_model = complete.iter().any(|c| !c) && !cfg.strict;
        let imputed = if needs_model {
            let obs = EmissionsObservations {
                emissions: vec![c_obs.iter().map(positive).collect()],
                revenue: vec![s_obs.clone()],
            };
            match impute_emissions(&obs, &sectors, k, seed.wrapping_add(row as u64)) {
                Ok(d) => Some(d),
                Err(EapoError::InsufficientData(msg)) => {
                    log::warn!("cannot impute on {date}: {msg}; excluding undisclosed assets");
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        for i in 0..n {
            if complete[i] {
                let lam = c_obs[i].expect("complete") / s_obs[i].expect("complete");
                for d in draws.iter_mut() {
                    d[(row, i)] = lam;
                }
            } else if let Some(imp) = &imputed {
                status[row][i] = IntensityStatus::Imputed;
                for (j, d) in draws.iter_mut().enumerate() {
                    d[(row, i)] = if c_obs[i] == Some(0.0) {
                        0.0
                    } else {
                        imp.panels[j][(0, i)]
                    };
                }
            } else {
                status[row][i] = IntensityStatus::Excluded;
            }
        }
    }
    let intensities = IntensityPanel::new(
        cfg.scope,
        rebalance_dates.to_vec(),
        tickers,
        draws,
        status,
        emissions,
    )?;
    Ok(AlignedDataset {
        prices,
        intensities,
        sectors,
        fiscal_year,
        revenue_annualized,
        dropped_tickers,
    })
}
