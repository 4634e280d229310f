//! Ledoit–Wolf linear shrinkage toward a structured target.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};
use crate::linalg::{min_eigenvalue, symmetrize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkageTarget {
    #[default]
    ConstantCorrelation,
    IdentityScaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageResult {
    pub sigma_hat: DMatrix<f64>,
    pub delta: f64,
    pub target_kind: ShrinkageTarget,
    /// Diagonal loading added to restore positive definiteness.
    pub jitter: f64,
    /// Columns whose variance was floored.
    pub degenerate_assets: Vec<usize>,
}

const MIN_EIGEN: f64 = 1e-10;

/// `Σ̂ = δF + (1 − δ)S` with `S` the `1/T` sample covariance.
pub fn ledoit_wolf(window: &DMatrix<f64>, target: ShrinkageTarget) -> Result<ShrinkageResult> {
    let (t, n) = window.shape();
    if t < 2 {
        return Err(EapoError::InsufficientData(format!(
            "shrinkage needs at least 2 rows, got {t}"
        )));
    }
    if n == 0 {
        return Err(EapoError::InvalidInput("window has no columns".into()));
    }
    ensure_finite(window.iter().copied(), "returns window")?;
    let tf = t as f64;
    let means = crate::linalg::column_means(window);
    let mut x = window.clone();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let mut s = x.transpose() * &x / tf;
    symmetrize(&mut s);

    let max_var = s.diagonal().max();
    let floor = (1e-12 * max_var).max(1e-20);
    let mut degenerate_assets = Vec::new();
    for i in 0..n {
        if s[(i, i)] <= floor {
            degenerate_assets.push(i);
            s[(i, i)] = floor;
        }
    }
    if !degenerate_assets.is_empty() {
        log::warn!("degenerate assets with zero variance floored: {degenerate_assets:?}");
    }

    let (target_matrix, delta) = match target {
        ShrinkageTarget::ConstantCorrelation => constant_correlation(&x, &s, tf),
        ShrinkageTarget::IdentityScaled => identity_scaled(&x, &s, tf),
    };
    let mut sigma_hat = &target_matrix * delta + &s * (1.0 - delta);
    symmetrize(&mut sigma_hat);

    let lmin = min_eigenvalue(&sigma_hat);
    let mut jitter = 0.0;
    if lmin < MIN_EIGEN {
        let base = 1e-10 * sigma_hat.trace() / n as f64;
        jitter = base.max(2.0 * MIN_EIGEN - lmin);
        for i in 0..n {
            sigma_hat[(i, i)] += jitter;
        }
    }
    Ok(ShrinkageResult {
        sigma_hat,
        delta,
        target_kind: target,
        jitter,
        degenerate_assets,
    })
}

fn constant_correlation(x: &DMatrix<f64>, s: &DMatrix<f64>, tf: f64) -> (DMatrix<f64>, f64) {
    let n = s.nrows();
    if n == 1 {
        return (s.clone(), 0.0);
    }
    let sd = s.diagonal().map(f64::sqrt);
    let mut rsum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rsum += s[(i, j)] / (sd[i] * sd[j]);
            }
        }
    }
    let rbar = rsum / (n * (n - 1)) as f64;
    let f = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            s[(i, i)]
        } else {
            rbar * sd[i] * sd[j]
        }
    });

    let x2 = x.map(|v| v * v);
    let x3 = x.map(|v| v * v * v);
    let pi_mat = (x2.transpose() * &x2) / tf - s.map(|v| v * v);
    let pi_hat = pi_mat.sum();
    let theta = (x3.transpose() * x) / tf;
    let mut rho_hat = pi_mat.diagonal().sum();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let theta_ii_ij = theta[(i, j)] - s[(i, i)] * s[(i, j)];
                rho_hat += rbar * (s[(j, j)] / s[(i, i)]).sqrt() * theta_ii_ij;
            }
        }
    }
    let gamma_hat = (&f - s).norm_squared();
    let delta = if gamma_hat > 0.0 {
        ((pi_hat - rho_hat) / gamma_hat / tf).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (f, delta)
}

fn identity_scaled(x: &DMatrix<f64>, s: &DMatrix<f64>, tf: f64) -> (DMatrix<f64>, f64) {
    let n = s.nrows();
    let mu = s.trace() / n as f64;
    let f = DMatrix::identity(n, n) * mu;
    let d2 = (s - &f).norm_squared();
    if d2 <= 0.0 {
        return (f, 0.0);
    }
    let s_norm2 = s.norm_squared();
    let mut b_bar2 = 0.0;
    for row in x.row_iter() {
        let xt = row.transpose();
        let sq = xt.norm_squared();
        b_bar2 += sq * sq - 2.0 * xt.dot(&(s * &xt)) + s_norm2;
    }
    b_bar2 /= tf * tf;
    let delta = (b_bar2.min(d2) / d2).clamp(0.0, 1.0);
    (f, delta)
}
