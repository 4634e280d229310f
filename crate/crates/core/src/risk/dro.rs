use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceFamily {
    Kl,
    Chi2,
}

impl FromStr for DivergenceFamily {
    type Err = EapoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" => Ok(DivergenceFamily::Kl),
            "chi2" | "chi-square" | "chi_square" => Ok(DivergenceFamily::Chi2),
            other => Err(EapoError::Config(format!(
                "unsupported divergence family `{other}`"
            ))),
        }
    }
}

impl DivergenceFamily {
    /// `φ(u)`: `u log u − u + 1` for KL, `(u − 1)²` for χ².
    pub fn phi(self, u: f64) -> f64 {
        match self {
            DivergenceFamily::Kl => {
                if u > 0.0 {
                    u * u.ln() - u + 1.0
                } else {
                    1.0
                }
            }
            DivergenceFamily::Chi2 => (u - 1.0) * (u - 1.0),
        }
    }

    /// Convex conjugate `φ*(y)`.
    pub fn phi_star(self, y: f64) -> f64 {
        match self {
            DivergenceFamily::Kl => y.exp_m1(),
            DivergenceFamily::Chi2 => {
                if y >= -2.0 {
                    y + 0.25 * y * y
                } else {
                    -1.0
                }
            }
        }
    }

    fn phi_star_prime(self, y: f64) -> f64 {
        match self {
            DivergenceFamily::Kl => y.exp(),
            DivergenceFamily::Chi2 => (1.0 + 0.5 * y).max(0.0),
        }
    }
}

/// Divergence ball of radius `ρ` around the uniform empirical measure on `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceBall {
    pub family: DivergenceFamily,
    pub rho: f64,
    pub support: DVector<f64>,
}

impl DivergenceBall {
    pub fn new(family: DivergenceFamily, rho: f64, support: DVector<f64>) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(EapoError::InvalidInput(format!(
                "rho must be >= 0, got {rho}"
            )));
        }
        if support.is_empty() {
            return Err(EapoError::InvalidInput("support is empty".into()));
        }
        ensure_finite(support.iter().copied(), "support")?;
        Ok(Self {
            family,
            rho,
            support,
        })
    }

    /// Linear payoff sample `ℓ_m = Σ_i x_i (γ_i + δ_i z_m)`.
    pub fn from_linear_loss(
        family: DivergenceFamily,
        rho: f64,
        x: &DVector<f64>,
        gamma: &DVector<f64>,
        delta: &DVector<f64>,
        z: &[f64],
    ) -> Result<Self> {
        if gamma.len() != x.len() || delta.len() != x.len() {
            return Err(EapoError::Shape {
                expected: x.len(),
                got: if gamma.len() != x.len() {
                    gamma.len()
                } else {
                    delta.len()
                },
            });
        }
        let base = x.dot(gamma);
        let slope = x.dot(delta);
        let support = DVector::from_iterator(z.len(), z.iter().map(|zm| base + slope * zm));
        Self::new(family, rho, support)
    }

    fn mean(&self) -> f64 {
        self.support.mean()
    }
}

const ETA_MIN: f64 = 1e-12;

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64, iters: usize) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `sup_ν {ν − η·mean φ*((ν − ℓ)/η)}` for fixed `η`.
fn inner_value(family: DivergenceFamily, ell: &[f64], eta: f64) -> f64 {
    let m = ell.len() as f64;
    match family {
        DivergenceFamily::Kl => {
            // ν* = −η log mean exp(−ℓ/η), where the conjugate term vanishes.
            let lo = ell.iter().copied().fold(f64::INFINITY, f64::min);
            let s: f64 = ell.iter().map(|l| (-(l - lo) / eta).exp()).sum::<f64>() / m;
            lo - eta * s.ln()
        }
        DivergenceFamily::Chi2 => {
            let lo = ell.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let slope = |nu: f64| {
                1.0 - ell
                    .iter()
                    .map(|l| family.phi_star_prime((nu - l) / eta))
                    .sum::<f64>()
                    / m
            };
            let (mut a, mut b) = (lo, hi);
            for _ in 0..300 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if slope(mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let nu = 0.5 * (a + b);
            nu - eta
                * ell
                    .iter()
                    .map(|l| family.phi_star((nu - l) / eta))
                    .sum::<f64>()
                / m
        }
    }
}

/// Worst-case mean `sup_{η ≥ 0, ν} {ν − ρη − η·mean φ*((ν − ℓ)/η)}`.
pub fn dro_dual_value(ball: &DivergenceBall) -> Result<f64> {
    let ell: Vec<f64> = ball.support.iter().copied().collect();
    let lo = ell.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if ball.rho == 0.0 {
        return Ok(ball.mean());
    }
    if hi == lo {
        return Ok(lo);
    }
    let spread = hi - lo;
    let g = |log_eta: f64| {
        let eta = log_eta.exp().max(ETA_MIN);
        inner_value(ball.family, &ell, eta) - ball.rho * eta
    };
    let lo_log = ETA_MIN.ln();
    let hi_log = (spread * 1e12 / ball.rho.min(1.0)).ln();
    let grid = 400;
    let step = (hi_log - lo_log) / grid as f64;
    let mut best_i: usize = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=grid {
        let v = g(lo_log + i as f64 * step);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo_log + best_i.saturating_sub(1) as f64 * step;
    let b = lo_log + (best_i + 1).min(grid) as f64 * step;
    let (_, v) = golden_max(a, b, g, 300);
    Ok(v.max(best_v).clamp(lo, hi))
}

pub const PRIMAL_ORACLE_MAX_SUPPORT: usize = 30;

/// Inner minimizer of `mean(ℓw + κφ(w))` over `{w ≥ 0, mean w = 1}`, by iteration.
fn penalized_weights(family: DivergenceFamily, ell: &[f64], kappa: f64) -> Vec<f64> {
    let m = ell.len();
    match family {
        DivergenceFamily::Kl => {
            // Exponentiated gradient with step 1/(2κ), tracked in log space.
            let mut logw = vec![0.0; m];
            for _ in 0..2000 {
                let raw: Vec<f64> = logw
                    .iter()
                    .zip(ell)
                    .map(|(lw, l)| lw - 0.5 * (l / kappa + lw))
                    .collect();
                let mx = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + (raw.iter().map(|r| (r - mx).exp()).sum::<f64>() / m as f64).ln();
                let next: Vec<f64> = raw.iter().map(|r| r - lse).collect();
                let moved = next
                    .iter()
                    .zip(&logw)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                logw = next;
                if moved < 1e-15 {
                    break;
                }
            }
            logw.iter().map(|v| v.exp()).collect()
        }
        DivergenceFamily::Chi2 => {
            // Projected gradient on {w ≥ 0, Σw = M} with step 1/(4κ).
            let mut w = DVector::from_element(m, 1.0);
            for _ in 0..5000 {
                let step = DVector::from_iterator(
                    m,
                    w.iter()
                        .zip(ell)
                        .map(|(wi, l)| wi - (l + 2.0 * kappa * (wi - 1.0)) / (4.0 * kappa)),
                );
                let next = crate::solver::project_scaled_simplex(&step, m as f64);
                let moved = (&next - &w).amax();
                w = next;
                if moved < 1e-15 {
                    break;
                }
            }
            w.iter().copied().collect()
        }
    }
}

/// Test oracle: `min mean(ℓw)` subject to `mean φ(w) ≤ ρ`, `mean w = 1`, `w ≥ 0`.
///
/// The divergence constraint is enforced by bisection on its multiplier `κ`;
/// the returned value sits on the feasible side.
pub fn dro_primal_oracle(ball: &DivergenceBall) -> Result<f64> {
    let m = ball.support.len();
    if m > PRIMAL_ORACLE_MAX_SUPPORT {
        return Err(EapoError::Refused(format!(
            "primal oracle supports at most {PRIMAL_ORACLE_MAX_SUPPORT} points, got {m}"
        )));
    }
    let ell: Vec<f64> = ball.support.iter().copied().collect();
    let lo = ell.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if ball.rho == 0.0 || hi == lo {
        return Ok(if hi == lo { lo } else { ball.mean() });
    }
    let fam = ball.family;
    let divergence = |w: &[f64]| w.iter().map(|&u| fam.phi(u)).sum::<f64>() / m as f64;
    let value = |w: &[f64]| w.iter().zip(&ell).map(|(a, b)| a * b).sum::<f64>() / m as f64;

    let ties = ell.iter().filter(|&&l| l == lo).count() as f64;
    let concentrated: Vec<f64> = ell
        .iter()
        .map(|&l| if l == lo { m as f64 / ties } else { 0.0 })
        .collect();
    if divergence(&concentrated) <= ball.rho {
        return Ok(lo);
    }
    let spread = hi - lo;
    let (mut a, mut b) = ((spread * 1e-10).ln(), (spread * 1e10).ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if divergence(&penalized_weights(fam, &ell, mid.exp())) > ball.rho {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Ok(value(&penalized_weights(fam, &ell, b.exp())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(f: DivergenceFamily, rho: f64, v: &[f64]) -> DivergenceBall {
        DivergenceBall::new(f, rho, DVector::from_column_slice(v)).unwrap()
    }

    #[test]
    fn zero_radius_is_mean() {
        let v = [0.3, 1.7, -0.2, 0.9];
        for f in [DivergenceFamily::Kl, DivergenceFamily::Chi2] {
            let b = ball(f, 0.0, &v);
            assert_eq!(dro_dual_value(&b).unwrap(), b.support.mean());
            assert_eq!(dro_primal_oracle(&b).unwrap(), b.support.mean());
        }
    }

    #[test]
    fn constant_support() {
        for f in [DivergenceFamily::Kl, DivergenceFamily::Chi2] {
            assert_eq!(dro_dual_value(&ball(f, 0.7, &[1.25; 5])).unwrap(), 1.25);
        }
    }

    #[test]
    fn chi2_closed_form_small_radius() {
        let v = [1.0, 1.1, 0.95, 1.02, 0.99, 1.05];
        let b = ball(DivergenceFamily::Chi2, 0.05, &v);
        let m = b.support.mean();
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
        let expected = m - (0.05 * var).sqrt();
        assert!((dro_dual_value(&b).unwrap() - expected).abs() < 1e-9);
        assert!((dro_primal_oracle(&b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn large_radius_approaches_minimum() {
        let v = [0.5, 1.0, 2.0];
        let b = ball(DivergenceFamily::Kl, 5.0, &v);
        assert!(dro_primal_oracle(&b).unwrap() <= 0.5 + 1e-9);
        assert!(dro_dual_value(&b).unwrap() <= 0.5 + 1e-9);
    }

    #[test]
    fn linear_loss_constructor() {
        let x = DVector::from_vec(vec![0.5, 0.5]);
        let g = DVector::from_vec(vec![1.0, 2.0]);
        let d = DVector::from_vec(vec![0.1, 0.3]);
        let b =
            DivergenceBall::from_linear_loss(DivergenceFamily::Kl, 0.1, &x, &g, &d, &[-1.0, 1.0])
                .unwrap();
        assert!((b.support[0] - 1.3).abs() < 1e-15 && (b.support[1] - 1.7).abs() < 1e-15);
    }

    #[test]
    fn family_parsing() {
        assert_eq!(
            "KL".parse::<DivergenceFamily>().unwrap(),
            DivergenceFamily::Kl
        );
        assert!("tv".parse::<DivergenceFamily>().is_err());
    }
}
