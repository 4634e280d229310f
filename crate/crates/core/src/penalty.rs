//! Intensity penalty operator `P(r, λ) = (1 − λ/λmax)^m · r`.
//!
//! Intensities outside `[0, λmax]` are clamped before evaluation. When the
//! cross-sectional maximum is zero every factor is one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};
use crate::types::{IntensityVector, Scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub m: u32,
    pub scope: Scope,
}

impl PenaltyParams {
    pub fn new(m: u32, scope: Scope) -> Result<Self> {
        if m == 0 {
            return Err(EapoError::InvalidInput(
                "curvature m must be at least 1".into(),
            ));
        }
        Ok(Self { m, scope })
    }
}

/// Multiplicative haircut `(1 − λ/λmax)^m` with clamping. Infallible; callers validate.
#[inline]
pub fn penalty_factor(lambda: f64, lambda_max: f64, m: u32) -> f64 {
    if lambda_max <= 0.0 {
        return 1.0;
    }
    let l = lambda.clamp(0.0, lambda_max);
    (1.0 - l / lambda_max).powi(m as i32)
}

pub fn penalty(r: f64, lambda: f64, lambda_max: f64, m: u32) -> Result<f64> {
    ensure_finite([r, lambda, lambda_max], "penalty arguments")?;
    if lambda_max < 0.0 {
        return Err(EapoError::InvalidInput(
            "lambda_max must be nonnegative".into(),
        ));
    }
    Ok(penalty_factor(lambda, lambda_max, m) * r)
}

/// Per-asset factors for a cross-section.
pub fn penalty_factors(intensities: &IntensityVector, m: u32) -> DVector<f64> {
    let lmax = intensities.lambda_max();
    intensities.values().map(|l| penalty_factor(l, lmax, m))
}

fn check_columns(returns: &DMatrix<f64>, intensities: &IntensityVector) -> Result<()> {
    if returns.ncols() != intensities.len() {
        return Err(EapoError::Shape {
            expected: intensities.len(),
            got: returns.ncols(),
        });
    }
    ensure_finite(returns.iter().copied(), "returns")
}

pub fn adjust_returns(
    returns: &DMatrix<f64>,
    intensities: &IntensityVector,
    params: PenaltyParams,
) -> Result<DMatrix<f64>> {
    check_columns(returns, intensities)?;
    let f = penalty_factors(intensities, params.m);
    let mut out = returns.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= f[j];
    }
    Ok(out)
}

/// Sample mean of adjusted returns, computed as factors times the plain mean.
pub fn emissions_adjusted_mean(
    window: &DMatrix<f64>,
    intensities: &IntensityVector,
    params: PenaltyParams,
) -> Result<DVector<f64>> {
    check_columns(window, intensities)?;
    if window.nrows() < 2 {
        return Err(EapoError::InsufficientData(format!(
            "window needs at least 2 rows, got {}",
            window.nrows()
        )));
    }
    let means = crate::linalg::column_means(window);
    Ok(means.component_mul(&penalty_factors(intensities, params.m)))
}

/// `L_i = m · E|R_i| / λmax`.
pub fn lipschitz_constants(
    mean_abs_returns: &DVector<f64>,
    lambda_max: f64,
    m: u32,
) -> Result<DVector<f64>> {
    ensure_finite(
        mean_abs_returns.iter().copied().chain([lambda_max]),
        "lipschitz inputs",
    )?;
    if lambda_max <= 0.0 {
        return Err(EapoError::AllZeroIntensity);
    }
    if mean_abs_returns.iter().any(|&v| v < 0.0) {
        return Err(EapoError::InvalidInput(
            "mean absolute returns must be nonnegative".into(),
        ));
    }
    Ok(mean_abs_returns * (m as f64 / lambda_max))
}

/// Column means of `|R|`.
pub fn mean_abs_returns(window: &DMatrix<f64>) -> DVector<f64> {
    crate::linalg::column_means(&window.abs())
}
