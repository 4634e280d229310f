use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};
use crate::linalg::{min_eigenvalue, symmetrize};
use crate::types::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmvMode {
    #[default]
    InverseVariance,
    Full,
}

pub fn weights_ew(n: usize) -> Result<WeightVector> {
    if n == 0 {
        return Err(EapoError::InvalidInput("empty universe".into()));
    }
    Ok(WeightVector::equal(n))
}

/// Minimum-variance weights.
///
/// `Full` solves `Σx ∝ 1`, adding diagonal jitter until `Σ` factors. The
/// unconstrained solution can short; negative entries are cut to zero and
/// the rest renormalized so the result stays long-only.
pub fn weights_gmv(sigma: &DMatrix<f64>, mode: GmvMode) -> Result<WeightVector> {
    let n = sigma.nrows();
    if n == 0 || sigma.ncols() != n {
        return Err(EapoError::Shape {
            expected: n,
            got: sigma.ncols(),
        });
    }
    ensure_finite(sigma.iter().copied(), "covariance")?;
    let raw = match mode {
        GmvMode::InverseVariance => {
            if sigma.diagonal().iter().any(|&v| v <= 0.0) {
                return Err(EapoError::InvalidInput("variances must be positive".into()));
            }
            sigma.diagonal().map(|v| 1.0 / v)
        }
        GmvMode::Full => {
            let mut s = sigma.clone();
            symmetrize(&mut s);
            let scale = s.trace().abs() / n as f64;
            let mut jitter = 0.0;
            let chol = loop {
                let mut a = s.clone();
                for i in 0..n {
                    a[(i, i)] += jitter;
                }
                if let Some(c) = a.cholesky() {
                    break c;
                }
                jitter = if jitter == 0.0 {
                    (1e-12 * scale)
                        .max(-min_eigenvalue(&s) + 1e-12 * scale)
                        .max(1e-300)
                } else {
                    jitter * 10.0
                };
                if !jitter.is_finite() || jitter > 1e6 * scale.max(1.0) {
                    return Err(EapoError::Numerical(
                        "covariance could not be regularized".into(),
                    ));
                }
                log::warn!("singular covariance in full GMV; adding jitter {jitter:e}");
            };
            let x = chol.solve(&DVector::from_element(n, 1.0));
            if x.iter().any(|v| *v < 0.0) {
                log::warn!("full GMV solution has short positions; truncating to long-only");
            }
            x.map(|v| v.max(0.0))
        }
    };
    let total = raw.sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(EapoError::Numerical(
            "minimum-variance weights do not normalize".into(),
        ));
    }
    WeightVector::new(raw / total)
}

/// Harmonic emissions weights `x_i ∝ 1/g_i` over assets with positive disclosed emissions.
pub fn weights_emw(emissions: &[Option<f64>]) -> Result<WeightVector> {
    let inv: Vec<f64> = emissions
        .iter()
        .map(|g| match g {
            Some(g) if g.is_finite() && *g > 0.0 => 1.0 / g,
            _ => 0.0,
        })
        .collect();
    let total: f64 = inv.iter().sum();
    if total <= 0.0 {
        return Err(EapoError::InsufficientData(
            "no asset has positive disclosed emissions; the EMW universe is empty".into(),
        ));
    }
    WeightVector::new(DVector::from_iterator(
        inv.len(),
        inv.iter().map(|v| v / total),
    ))
}
