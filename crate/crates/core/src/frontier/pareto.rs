use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{ensure_finite, EapoError, Result};
use crate::solver::{penalty_term, solve_robust_mv, SolverConfig};
use crate::types::{IntensityVector, WeightVector};

/// One point on the scalarized frontier `g(μ) = max_x xᵀr − μ·xᵀλ − pen(x)`.
///
/// `risk_penalty` is zero for vertex sweeps, so `value = mean_return − μ·intensity` there.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub mu_weight: f64,
    pub weights: WeightVector,
    pub mean_return: f64,
    pub intensity: f64,
    /// Robustness and variance terms at the solution, `≥ 0`.
    pub risk_penalty: f64,
    pub value: f64,
}

impl FrontierPoint {
    fn from_weights(
        mu: f64,
        weights: WeightVector,
        r: &DVector<f64>,
        lambda: &DVector<f64>,
        risk_penalty: f64,
    ) -> Self {
        let mean_return = weights.as_vector().dot(r);
        let intensity = weights.as_vector().dot(lambda);
        Self {
            mu_weight: mu,
            weights,
            mean_return,
            intensity,
            risk_penalty,
            value: mean_return - mu * intensity - risk_penalty,
        }
    }
}

fn check_grid(mu_grid: &[f64]) -> Result<()> {
    if mu_grid.is_empty() {
        return Err(EapoError::InvalidInput("empty mu grid".into()));
    }
    ensure_finite(mu_grid.iter().copied(), "mu grid")?;
    if mu_grid[0] < 0.0 || mu_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(EapoError::InvalidInput(
            "mu grid must be nonnegative and ascending".into(),
        ));
    }
    Ok(())
}

/// Vertex solutions `e_k`, `k = argmax_i (r_i − μλ_i)` with lowest-index ties.
pub fn pareto_sweep(
    r: &DVector<f64>,
    lambda: &IntensityVector,
    mu_grid: &[f64],
) -> Result<Vec<FrontierPoint>> {
    check_grid(mu_grid)?;
    let lam = lambda.values();
    if r.len() != lam.len() {
        return Err(EapoError::Shape {
            expected: lam.len(),
            got: r.len(),
        });
    }
    ensure_finite(r.iter().copied(), "returns")?;
    let n = r.len();
    Ok(mu_grid
        .iter()
        .map(|&mu| {
            let mut k = 0;
            for i in 1..n {
                if r[i] - mu * lam[i] > r[k] - mu * lam[k] {
                    k = i;
                }
            }
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            FrontierPoint::from_weights(mu, WeightVector::new(e).expect("vertex"), r, lam, 0.0)
        })
        .collect())
}

/// Re-solves the full robust objective with `μᵉ − μλ` at each grid point, warm-started along the grid.
pub fn pareto_sweep_regularized(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    lambda: &IntensityVector,
    cfg: &SolverConfig,
    mu_grid: &[f64],
) -> Result<Vec<FrontierPoint>> {
    check_grid(mu_grid)?;
    let lam = lambda.values();
    if mu_e.len() != lam.len() {
        return Err(EapoError::Shape {
            expected: lam.len(),
            got: mu_e.len(),
        });
    }
    let cfg = SolverConfig {
        turnover_cap: None,
        ..cfg.clone()
    };
    let mut warm = WeightVector::equal(mu_e.len());
    let mut out = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let shifted = mu_e - lam * mu;
        let (x, _) = solve_robust_mv(&shifted, sigma, l, &cfg, &warm)?;
        let xv = x.as_vector();
        let pen = penalty_term(xv, l, &cfg) + cfg.theta * xv.dot(&(sigma * xv));
        warm = x.clone();
        out.push(FrontierPoint::from_weights(mu, x, mu_e, lam, pen));
    }
    Ok(out)
}

/// Indices (middle point of each triple) at which a frontier check failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrontierReport {
    pub convexity_violations: Vec<usize>,
    pub slope_violations: Vec<usize>,
    pub monotonicity_violations: Vec<usize>,
    /// Interior indices where `λ̄` moves by more than the slope tolerance across the triple.
    pub skipped_kinks: Vec<usize>,
}

impl FrontierReport {
    pub fn is_clean(&self) -> bool {
        self.convexity_violations.is_empty()
            && self.slope_violations.is_empty()
            && self.monotonicity_violations.is_empty()
    }
}

const SLOPE_REL_TOL: f64 = 0.02;

/// Convexity of `g`, envelope slope `g' = −λ̄`, and monotone `λ̄`, at tolerance `1e-12` relative.
pub fn frontier_diagnostics(points: &[FrontierPoint]) -> Result<FrontierReport> {
    frontier_diagnostics_with_tol(points, 1e-12)
}

/// As [`frontier_diagnostics`] with a relative slack `tol` for convexity and monotonicity,
/// for frontiers produced by an iterative solver.
pub fn frontier_diagnostics_with_tol(points: &[FrontierPoint], tol: f64) -> Result<FrontierReport> {
    if points.len() < 3 {
        return Err(EapoError::InvalidInput(format!(
            "need at least 3 frontier points, got {}",
            points.len()
        )));
    }
    let scale = points.iter().map(|p| p.value.abs()).fold(1.0, f64::max);
    let mut report = FrontierReport::default();
    for k in 1..points.len() {
        let (a, b) = (&points[k - 1], &points[k]);
        if b.intensity > a.intensity + tol * a.intensity.abs().max(1.0) {
            report.monotonicity_violations.push(k);
        }
    }
    for k in 1..points.len() - 1 {
        let (a, b, c) = (&points[k - 1], &points[k], &points[k + 1]);
        let span = c.mu_weight - a.mu_weight;
        if span <= 0.0 {
            continue;
        }
        let t = (b.mu_weight - a.mu_weight) / span;
        let chord = (1.0 - t) * a.value + t * c.value;
        if b.value > chord + tol * scale {
            report.convexity_violations.push(k);
        }
        let reference = b.intensity.abs().max(1e-300);
        if (c.intensity - a.intensity).abs() > SLOPE_REL_TOL * reference {
            report.skipped_kinks.push(k);
            continue;
        }
        let slope = (c.value - a.value) / span;
        if (slope + b.intensity).abs()
            > SLOPE_REL_TOL * b.intensity.abs() + tol * scale / span.max(1e-300)
        {
            report.slope_violations.push(k);
        }
    }
    Ok(report)
}

/// `V*(Γ)` on an ascending grid, warm-started from the previous grid point.
pub fn value_curve_gamma(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
    gamma_grid: &[f64],
) -> Result<Vec<f64>> {
    check_grid(gamma_grid).map_err(|_| {
        EapoError::InvalidInput("gamma grid must be nonempty, nonnegative and ascending".into())
    })?;
    let mut warm = WeightVector::equal(mu_e.len());
    let mut out = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let c = SolverConfig {
            gamma,
            turnover_cap: None,
            ..cfg.clone()
        };
        let (x, d) = solve_robust_mv(mu_e, sigma, l, &c, &warm)?;
        warm = x;
        out.push(d.objective_value);
    }
    Ok(out)
}
