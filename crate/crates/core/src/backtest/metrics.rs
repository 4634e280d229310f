use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};
use crate::linalg::{mean, sample_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetrics {
    pub n_days: usize,
    /// Geometric annualized return.
    pub annualized_return: f64,
    pub annualized_volatility: f64,
    /// `None` when the return series has zero dispersion.
    pub sharpe: Option<f64>,
    /// `None` when there are fewer than two negative returns or they do not vary.
    pub sortino: Option<f64>,
    /// Worst peak-to-trough move of the wealth path, `≤ 0`.
    pub max_drawdown: f64,
}

pub fn performance_metrics(net_returns: &[f64], annualization: f64) -> Result<PerformanceMetrics> {
    if net_returns.len() < 2 {
        return Err(EapoError::InsufficientData(
            "need at least 2 returns".into(),
        ));
    }
    ensure_finite(net_returns.iter().copied(), "net returns")?;
    if net_returns.iter().any(|&r| r <= -1.0) {
        return Err(EapoError::InvalidInput(
            "net returns must exceed -100%".into(),
        ));
    }
    let t = net_returns.len() as f64;
    let log_growth: f64 = net_returns.iter().map(|r| r.ln_1p()).sum();
    let annualized_return = (log_growth * annualization / t).exp_m1();
    let m = mean(net_returns);
    let sd = sample_std(net_returns);
    let root = annualization.sqrt();
    let downside: Vec<f64> = net_returns.iter().copied().filter(|&r| r < 0.0).collect();
    let dsd = sample_std(&downside);
    let sortino = (downside.len() >= 2 && dsd > 0.0).then(|| m / dsd * root);

    let mut peak = 1.0f64;
    let mut wealth = 1.0f64;
    let mut mdd = 0.0f64;
    for r in net_returns {
        wealth *= 1.0 + r;
        peak = peak.max(wealth);
        mdd = mdd.min(wealth / peak - 1.0);
    }
    Ok(PerformanceMetrics {
        n_days: net_returns.len(),
        annualized_return,
        annualized_volatility: sd * root,
        sharpe: (sd > 0.0).then(|| m / sd * root),
        sortino,
        max_drawdown: mdd,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityMetrics {
    /// `Λ_t = x_tᵀλ_t` per holding period.
    pub lambda_path: Vec<f64>,
    /// `Y_t = Λ_t / r_t`; `None` where the period return is exactly zero.
    pub yield_path: Vec<Option<f64>>,
    pub average_intensity: f64,
}

/// Portfolio intensity per holding period and the emissions yield against the period's net return.
pub fn intensity_metrics(
    weights: &[DVector<f64>],
    intensities: &[DVector<f64>],
    period_returns: &[f64],
) -> Result<IntensityMetrics> {
    if weights.len() != intensities.len() || weights.len() != period_returns.len() {
        return Err(EapoError::Shape {
            expected: weights.len(),
            got: intensities.len().min(period_returns.len()),
        });
    }
    if weights.is_empty() {
        return Err(EapoError::InsufficientData("no holding periods".into()));
    }
    let mut lambda_path = Vec::with_capacity(weights.len());
    for (x, l) in weights.iter().zip(intensities) {
        if x.len() != l.len() {
            return Err(EapoError::Shape {
                expected: x.len(),
                got: l.len(),
            });
        }
        lambda_path.push(x.dot(l));
    }
    let yield_path = lambda_path
        .iter()
        .zip(period_returns)
        .map(|(lam, r)| (*r != 0.0).then(|| lam / r))
        .collect();
    let average_intensity = mean(&lambda_path);
    Ok(IntensityMetrics {
        lambda_path,
        yield_path,
        average_intensity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracking {
    /// `None` when the benchmark has zero variance.
    pub beta: Option<f64>,
    /// `None` when either series has zero variance.
    pub correlation: Option<f64>,
    pub tracking_error: f64,
    /// `None` when the tracking error is zero.
    pub information_ratio: Option<f64>,
}

/// Beta, correlation, annualized tracking error and information ratio of `s` against `b`.
pub fn tracking(s: &[f64], b: &[f64], annualization: f64) -> Result<Tracking> {
    if s.len() != b.len() {
        return Err(EapoError::Shape {
            expected: s.len(),
            got: b.len(),
        });
    }
    if s.len() < 3 {
        return Err(EapoError::InsufficientData(
            "tracking needs at least 3 observations".into(),
        ));
    }
    ensure_finite(s.iter().chain(b).copied(), "tracking inputs")?;
    let n = s.len() as f64;
    let (ms, mb) = (mean(s), mean(b));
    let cov = s
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ms) * (y - mb))
        .sum::<f64>()
        / (n - 1.0);
    let var_s = s.iter().map(|x| (x - ms).powi(2)).sum::<f64>() / (n - 1.0);
    let var_b = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0);
    let active: Vec<f64> = s.iter().zip(b).map(|(x, y)| x - y).collect();
    let te = sample_std(&active) * annualization.sqrt();
    Ok(Tracking {
        beta: (var_b > 0.0).then(|| cov / var_b),
        correlation: (var_s > 0.0 && var_b > 0.0).then(|| cov / (var_s * var_b).sqrt()),
        tracking_error: te,
        information_ratio: (te > 0.0).then(|| mean(&active) * annualization / te),
    })
}
