//! Norm-ball ambiguity sets around estimated intensities.
//!
//! A ball `{ε : ‖W⁻¹ε‖_p ≤ Γ}` optionally carries a whitener `W = Σ_λ^{1/2}`.
//! The penalty used by the solvers is the dual-norm bound `Γ‖diag(L)x‖_q`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};
use crate::penalty::{penalty_factor, PenaltyParams};
use crate::types::{IntensityVector, WeightVector};

/// Eigenvalue floor applied to singular intensity covariances.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Fraction of draws placed on the sphere; the rest fill the interior.
const BOUNDARY_SHARE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BallNorm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl BallNorm {
    /// Hölder conjugate used in the envelope.
    pub fn dual(self) -> BallNorm {
        match self {
            BallNorm::L1 => BallNorm::LInf,
            BallNorm::L2 => BallNorm::L2,
            BallNorm::LInf => BallNorm::L1,
        }
    }

    pub fn norm(self, v: impl IntoIterator<Item = f64>) -> f64 {
        let it = v.into_iter().map(f64::abs);
        match self {
            BallNorm::L1 => it.sum(),
            BallNorm::L2 => it.map(|a| a * a).sum::<f64>().sqrt(),
            BallNorm::LInf => it.fold(0.0, f64::max),
        }
    }
}

impl FromStr for BallNorm {
    type Err = EapoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(BallNorm::L1),
            "2" | "l2" => Ok(BallNorm::L2),
            "inf" | "linf" | "infinity" => Ok(BallNorm::LInf),
            other => Err(EapoError::Config(format!(
                "unsupported ball norm `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityBall {
    pub p: BallNorm,
    pub gamma: f64,
    pub whitener: Option<DMatrix<f64>>,
}

impl AmbiguityBall {
    pub fn new(p: BallNorm, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(EapoError::InvalidInput(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            p,
            gamma,
            whitener: None,
        })
    }

    /// Attaches `Σ_λ^{1/2}`, flooring eigenvalues at [`EIGEN_FLOOR`].
    pub fn with_covariance(mut self, cov: &DMatrix<f64>) -> Result<Self> {
        self.whitener = Some(psd_power(cov, 0.5)?);
        Ok(self)
    }

    /// `‖W⁻¹ε‖_p`, or `‖ε‖_p` without a whitener.
    pub fn whitened_norm(&self, eps: &DVector<f64>) -> Result<f64> {
        match &self.whitener {
            None => Ok(self.p.norm(eps.iter().copied())),
            Some(w) => {
                let inv = psd_power(&(w * w.transpose()), -0.5)?;
                Ok(self.p.norm((inv * eps).iter().copied()))
            }
        }
    }
}

/// Symmetric matrix power via eigen-decomposition with an eigenvalue floor.
fn psd_power(cov: &DMatrix<f64>, power: f64) -> Result<DMatrix<f64>> {
    if !cov.is_square() {
        return Err(EapoError::InvalidInput("covariance must be square".into()));
    }
    ensure_finite(cov.iter().copied(), "covariance")?;
    let scale = cov.amax().max(1.0);
    if (cov - cov.transpose()).amax() > 1e-10 * scale {
        return Err(EapoError::InvalidInput(
            "covariance must be symmetric".into(),
        ));
    }
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v < -1e-10 * scale) {
        return Err(EapoError::InvalidInput(
            "covariance is not positive semidefinite".into(),
        ));
    }
    let d = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR).powf(power));
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

/// `Γ‖diag(L)x‖_q` with `q` the conjugate of the ball norm.
pub fn dual_norm_penalty(x: &WeightVector, l: &DVector<f64>, ball: &AmbiguityBall) -> Result<f64> {
    if l.len() != x.len() {
        return Err(EapoError::Shape {
            expected: x.len(),
            got: l.len(),
        });
    }
    Ok(ball.gamma
        * ball
            .p
            .dual()
            .norm(x.as_vector().iter().zip(l.iter()).map(|(a, b)| a * b)))
}

/// Envelope for a whitened ball: `Γ‖|W|ᵀ diag(L) x‖_q`. Equals [`dual_norm_penalty`] without a whitener.
pub fn whitened_envelope(x: &WeightVector, l: &DVector<f64>, ball: &AmbiguityBall) -> Result<f64> {
    match &ball.whitener {
        None => dual_norm_penalty(x, l, ball),
        Some(w) => {
            let lx = x.as_vector().component_mul(l);
            let v = w.abs().transpose() * lx;
            Ok(ball.gamma * ball.p.dual().norm(v.iter().copied()))
        }
    }
}

/// Draws `u` with `‖u‖_p = radius`.
fn sample_sphere<R: Rng>(rng: &mut R, n: usize, p: BallNorm, radius: f64) -> DVector<f64> {
    let mut u = match p {
        BallNorm::L2 => DVector::from_fn(n, |_, _| StandardNormal.sample(rng)),
        BallNorm::L1 => DVector::from_fn(n, |_, _| {
            let e: f64 = Exp1.sample(rng);
            if rng.random::<bool>() {
                e
            } else {
                -e
            }
        }),
        BallNorm::LInf => {
            let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
            let k = rng.random_range(0..n);
            v[k] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v
        }
    };
    let norm = p.norm(u.iter().copied());
    if norm > 0.0 {
        u *= radius / norm;
    }
    u
}

/// Draws perturbations from the ball: 80% on the boundary, 20% inside.
pub fn sample_ball(
    ball: &AmbiguityBall,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let radius = if rng.random::<f64>() < BOUNDARY_SHARE {
                ball.gamma
            } else {
                ball.gamma * rng.random::<f64>().powf(1.0 / n as f64)
            };
            let u = sample_sphere(&mut rng, n, ball.p, radius);
            match &ball.whitener {
                Some(w) => w * u,
                None => u,
            }
        })
        .collect()
}

/// Mean-gap `xᵀ(μᵉ(λ̂) − μᵉ(clamp(λ̂ + ε)))` for one perturbation, `λmax` held at `λ̂`'s value.
pub fn mean_gap(
    x: &WeightVector,
    lambda_hat: &IntensityVector,
    eps: &DVector<f64>,
    means: &DVector<f64>,
    m: u32,
) -> f64 {
    let lmax = lambda_hat.lambda_max();
    x.as_vector()
        .iter()
        .zip(lambda_hat.values().iter())
        .zip(eps.iter().zip(means.iter()))
        .map(|((&xi, &li), (&ei, &mi))| {
            xi * mi * (penalty_factor(li, lmax, m) - penalty_factor(li + ei, lmax, m))
        })
        .sum()
}

/// Largest sampled mean-gap over the ball. Deterministic given `seed`.
pub fn sampled_worst_case_gap(
    x: &WeightVector,
    lambda_hat: &IntensityVector,
    ball: &AmbiguityBall,
    params: PenaltyParams,
    window: &DMatrix<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = x.len();
    if lambda_hat.len() != n || window.ncols() != n {
        return Err(EapoError::Shape {
            expected: n,
            got: if lambda_hat.len() != n {
                lambda_hat.len()
            } else {
                window.ncols()
            },
        });
    }
    if n_samples == 0 {
        return Err(EapoError::InvalidInput(
            "n_samples must be at least 1".into(),
        ));
    }
    if window.nrows() == 0 {
        return Err(EapoError::InsufficientData("empty returns window".into()));
    }
    let means = crate::linalg::column_means(window);
    let gap = sample_ball(ball, n, n_samples, seed)
        .iter()
        .map(|eps| mean_gap(x, lambda_hat, eps, &means, params.m))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(gap.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseStats {
    pub axis1: f64,
    pub axis2: f64,
    pub area: f64,
}

/// Quantile of the chi-square distribution with two degrees of freedom.
pub fn chi2_2_quantile(confidence: f64) -> f64 {
    -2.0 * (1.0 - confidence).ln()
}

pub fn ellipse_stats(cov: &DMatrix<f64>, confidence: f64) -> Result<EllipseStats> {
    if cov.shape() != (2, 2) {
        return Err(EapoError::InvalidInput(
            "ellipse statistics need a 2x2 covariance".into(),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EapoError::InvalidInput(
            "confidence must lie in (0, 1)".into(),
        ));
    }
    ensure_finite(cov.iter().copied(), "covariance")?;
    let (a, b, d) = (cov[(0, 0)], 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)]);
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * scale {
        return Err(EapoError::InvalidInput(
            "covariance must be symmetric".into(),
        ));
    }
    let half_trace = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (e1, e2) = (half_trace + disc, half_trace - disc);
    if e2 < -1e-12 * scale {
        return Err(EapoError::InvalidInput(
            "covariance is not positive semidefinite".into(),
        ));
    }
    let c = chi2_2_quantile(confidence);
    let axis1 = (c * e1.max(0.0)).sqrt();
    let axis2 = (c * e2.max(0.0)).sqrt();
    Ok(EllipseStats {
        axis1,
        axis2,
        area: PI * axis1 * axis2,
    })
}
