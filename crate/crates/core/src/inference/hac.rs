use serde::{Deserialize, Serialize};

use crate::backtest::BacktestReport;
use crate::error::{ensure_finite, EapoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HacResult {
    pub mean_diff: f64,
    /// Bartlett-weighted long-run variance, floored at zero.
    pub long_run_variance: f64,
    /// `sqrt(long_run_variance / T)`.
    pub standard_error_of_mean: f64,
    /// `mean_diff / standard_error_of_mean`; `Some(0.0)` for a zero series, `None` when the mean is nonzero but the variance vanishes.
    pub t_stat: Option<f64>,
    /// `mean_diff / sqrt(long_run_variance)` without the `√T` scaling.
    pub raw_t_stat: Option<f64>,
    pub bandwidth: usize,
    pub n: usize,
}

/// Newey–West HAC statistics for the mean of `delta`, with `1/T` autocovariances.
pub fn newey_west(delta: &[f64], bandwidth: usize) -> Result<HacResult> {
    let t = delta.len();
    if t <= bandwidth {
        return Err(EapoError::InvalidInput(format!(
            "series length {t} must exceed bandwidth {bandwidth}"
        )));
    }
    ensure_finite(delta.iter().copied(), "return differential")?;
    let tf = t as f64;
    let mean = delta.iter().sum::<f64>() / tf;
    let centered: Vec<f64> = delta.iter().map(|d| d - mean).collect();
    let autocov = |lag: usize| {
        centered[lag..]
            .iter()
            .zip(&centered)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / tf
    };
    let mut lrv = autocov(0);
    for lag in 1..=bandwidth {
        lrv += 2.0 * (1.0 - lag as f64 / (bandwidth as f64 + 1.0)) * autocov(lag);
    }
    if lrv < 0.0 {
        log::warn!("negative long-run variance {lrv:e} floored at zero");
        lrv = 0.0;
    }
    let se = (lrv / tf).sqrt();
    let ratio = |den: f64| {
        if den > 0.0 {
            Some(mean / den)
        } else if mean == 0.0 {
            Some(0.0)
        } else {
            None
        }
    };
    Ok(HacResult {
        mean_diff: mean,
        long_run_variance: lrv,
        standard_error_of_mean: se,
        t_stat: ratio(se),
        raw_t_stat: ratio(lrv.sqrt()),
        bandwidth,
        n: t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub first: String,
    pub second: String,
    pub result: HacResult,
}

/// HAC tests on `r_i − r_j` for every ordered pair of distinct reports.
pub fn pairwise_return_tests(
    reports: &[BacktestReport],
    bandwidth: usize,
) -> Result<Vec<PairwiseTest>> {
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    if reports.iter().any(|r| r.dates != first.dates) {
        return Err(EapoError::Alignment(
            "reports cover different calendars".into(),
        ));
    }
    let mut out = Vec::new();
    for a in reports {
        for b in reports {
            if std::ptr::eq(a, b) {
                continue;
            }
            let delta: Vec<f64> = a
                .net_returns
                .iter()
                .zip(&b.net_returns)
                .map(|(x, y)| x - y)
                .collect();
            out.push(PairwiseTest {
                first: a.strategy.name().to_string(),
                second: b.strategy.name().to_string(),
                result: newey_west(&delta, bandwidth)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bandwidth_is_iid() {
        let x = [0.3, -0.1, 0.4, 0.0, 0.25, -0.2];
        let r = newey_west(&x, 0).unwrap();
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        assert!((r.standard_error_of_mean - (var / n).sqrt()).abs() < 1e-15);
        assert!((r.t_stat.unwrap() - m / (var / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_series() {
        let r = newey_west(&[0.5; 10], 3).unwrap();
        assert_eq!(r.long_run_variance, 0.0);
        assert_eq!(r.t_stat, None);
        assert_eq!(newey_west(&[0.0; 10], 3).unwrap().t_stat, Some(0.0));
    }

    #[test]
    fn bandwidth_must_be_smaller_than_length() {
        assert!(newey_west(&[1.0, 2.0], 2).is_err());
    }
}
