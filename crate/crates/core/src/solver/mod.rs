//! Robust mean-variance on the simplex.
//!
//! Maximizes `xᵀμᵉ − Γ‖diag(L)x‖_q − θ xᵀΣx` by projected gradient ascent with
//! backtracking. The default absorbs `diag(L)` into `Γ` and uses the Euclidean
//! ball, giving the penalty `Γ‖x‖₂`. The non-smooth `q = ∞` case is solved
//! through its epigraph: an outer golden-section search over the level `u` and
//! an inner solve over the capped simplex `{x ∈ Δ : L_i x_i ≤ u}`.

mod oracle;
mod projection;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use oracle::{brute_force_oracle, simplex_grid_search, ORACLE_MAX_ASSETS};
pub use projection::{
    project_simplex, project_turnover, TurnoverProjection, TURNOVER_MAX_ROUNDS, TURNOVER_TOL,
};

pub(crate) use projection::{project_capped_simplex, project_scaled_simplex, project_simplex_raw};

use crate::ambiguity::BallNorm;
use crate::error::{ensure_finite, EapoError, Result};
use crate::linalg::{max_eigenvalue, quad_form};
use crate::types::WeightVector;

fn default_gamma() -> f64 {
    3.5
}
fn default_theta() -> f64 {
    0.5
}
fn default_m() -> u32 {
    10
}
fn default_p() -> BallNorm {
    BallNorm::L2
}
fn default_max_iters() -> usize {
    5000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_absorb() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_p")]
    pub p: BallNorm,
    /// Initial step size; `None` uses `1 / (2θ·λmax(Σ) + Γ + 1)`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub turnover_cap: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Replace `diag(L)` by the identity (the scale lives in `Γ`).
    #[serde(default = "default_absorb")]
    pub absorb_lipschitz: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            theta: default_theta(),
            m: default_m(),
            p: default_p(),
            eta: None,
            max_iters: default_max_iters(),
            turnover_cap: None,
            tol: default_tol(),
            seed: 0,
            absorb_lipschitz: default_absorb(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EapoError::Config(msg));
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return bad(format!("theta must be >= 0, got {}", self.theta));
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta > 0.0) {
                return bad(format!("eta must be positive, got {eta}"));
            }
        }
        if let Some(tau) = self.turnover_cap {
            if !(tau.is_finite() && tau > 0.0 && tau <= 2.0) {
                return bad(format!("turnover cap must lie in (0, 2], got {tau}"));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_projected_gradient_norm: f64,
    pub objective_value: f64,
    pub turnover_binding: bool,
    pub converged: bool,
    /// Set when the turnover projection hit its round cap.
    pub turnover_warning: bool,
}

/// Per-asset weights inside the norm, or `None` for the identity.
fn effective_l<'a>(l: Option<&'a DVector<f64>>, cfg: &SolverConfig) -> Option<&'a DVector<f64>> {
    if cfg.absorb_lipschitz {
        None
    } else {
        l
    }
}

pub(crate) fn check_dims(
    x_len: usize,
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
) -> Result<()> {
    let n = mu_e.len();
    for got in [
        x_len,
        sigma.nrows(),
        sigma.ncols(),
        l.map_or(n, |v| v.len()),
    ] {
        if got != n {
            return Err(EapoError::Shape { expected: n, got });
        }
    }
    Ok(())
}

/// `Γ‖diag(L)x‖_q` with `L = 1` when absorbed.
pub fn penalty_term(x: &DVector<f64>, l: Option<&DVector<f64>>, cfg: &SolverConfig) -> f64 {
    let q = cfg.p.dual();
    let norm = match effective_l(l, cfg) {
        Some(l) => q.norm(x.iter().zip(l.iter()).map(|(a, b)| a * b)),
        None => q.norm(x.iter().copied()),
    };
    cfg.gamma * norm
}

pub(crate) fn objective_raw(
    x: &DVector<f64>,
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> f64 {
    x.dot(mu_e) - penalty_term(x, l, cfg) - cfg.theta * quad_form(sigma, x)
}

pub fn objective(
    x: &WeightVector,
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_dims(x.len(), mu_e, sigma, l)?;
    Ok(objective_raw(x.as_vector(), mu_e, sigma, l, cfg))
}

/// (Sub)gradient of the penalty term at a nonnegative `x`.
pub(crate) fn penalty_gradient(
    x: &DVector<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> DVector<f64> {
    let n = x.len();
    let ones = DVector::from_element(n, 1.0);
    let l = effective_l(l, cfg).unwrap_or(&ones);
    let lx = x.component_mul(l);
    match cfg.p.dual() {
        BallNorm::L2 => {
            let nrm = lx.norm();
            if nrm > 0.0 {
                lx.component_mul(l) * (cfg.gamma / nrm)
            } else {
                DVector::zeros(n)
            }
        }
        BallNorm::L1 => l * cfg.gamma,
        BallNorm::LInf => {
            let mut k = 0;
            for i in 1..n {
                if lx[i] > lx[k] {
                    k = i;
                }
            }
            let mut g = DVector::zeros(n);
            g[k] = cfg.gamma * l[k];
            g
        }
    }
}

fn gradient_raw(
    x: &DVector<f64>,
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> DVector<f64> {
    mu_e - penalty_gradient(x, l, cfg) - (sigma * x) * (2.0 * cfg.theta)
}

/// `μᵉ − Γ∂‖diag(L)x‖_q − 2θΣx`; exact in the smooth cases.
pub fn gradient(
    x: &WeightVector,
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<DVector<f64>> {
    check_dims(x.len(), mu_e, sigma, l)?;
    Ok(gradient_raw(x.as_vector(), mu_e, sigma, l, cfg))
}

/// Step-size floor below which backtracking gives up.
const ETA_FLOOR: f64 = 1e-18;

pub(crate) struct PgdOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    pub pg_norm: f64,
    pub converged: bool,
}

/// Projected gradient ascent with halving backtracking. Every accepted step is nondecreasing.
pub(crate) fn projected_ascent(
    x0: DVector<f64>,
    eta0: f64,
    tol: f64,
    max_iters: usize,
    f: impl Fn(&DVector<f64>) -> f64,
    grad: impl Fn(&DVector<f64>) -> DVector<f64>,
    project: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<PgdOutcome> {
    let mut x = x0;
    let mut fx = f(&x);
    let mut eta = eta0;
    let mut pg_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let g = grad(&x);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(EapoError::Numerical(format!(
                "non-finite gradient at iteration {iterations}"
            )));
        }
        loop {
            let y = project(&(&x + &g * eta));
            pg_norm = (&y - &x).norm() / eta;
            let fy = f(&y);
            if pg_norm <= tol {
                if fy >= fx {
                    x = y;
                    fx = fy;
                }
                converged = true;
                break;
            }
            if fy >= fx {
                x = y;
                fx = fy;
                break;
            }
            eta *= 0.5;
            if eta < ETA_FLOOR {
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }
    Ok(PgdOutcome {
        x,
        value: fx,
        iterations,
        pg_norm,
        converged,
    })
}

fn default_eta(sigma: &DMatrix<f64>, cfg: &SolverConfig) -> f64 {
    cfg.eta.unwrap_or_else(|| {
        let lmax = if cfg.theta > 0.0 {
            max_eigenvalue(sigma).max(0.0)
        } else {
            0.0
        };
        1.0 / (2.0 * cfg.theta * lmax + cfg.gamma + 1.0)
    })
}

/// Solves the period problem from `warm_start`; the turnover cap is measured against `warm_start`.
pub fn solve_robust_mv(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
    warm_start: &WeightVector,
) -> Result<(WeightVector, SolveDiagnostics)> {
    cfg.validate()?;
    check_dims(warm_start.len(), mu_e, sigma, l)?;
    ensure_finite(mu_e.iter().chain(sigma.iter()).copied(), "solver inputs")?;
    if let Some(l) = l {
        ensure_finite(l.iter().copied(), "lipschitz constants")?;
    }
    let eta0 = default_eta(sigma, cfg);
    let x0 = warm_start.as_vector().clone();
    let nonsmooth = cfg.gamma > 0.0 && cfg.p.dual() == BallNorm::LInf && mu_e.len() > 1;
    let out = if nonsmooth {
        solve_epigraph(mu_e, sigma, effective_l(l, cfg), cfg, x0, eta0)?
    } else {
        projected_ascent(
            x0,
            eta0,
            cfg.tol,
            cfg.max_iters,
            |x| objective_raw(x, mu_e, sigma, l, cfg),
            |x| gradient_raw(x, mu_e, sigma, l, cfg),
            project_simplex_raw,
        )?
    };
    let mut x = WeightVector::new(out.x).map_err(|e| EapoError::Numerical(e.to_string()))?;
    let mut turnover_binding = false;
    let mut turnover_warning = false;
    if let Some(tau) = cfg.turnover_cap {
        if (x.as_vector() - warm_start.as_vector()).lp_norm(1) > tau {
            let proj = project_turnover(&x, warm_start, tau);
            x = proj.weights;
            turnover_binding = true;
            turnover_warning = !proj.converged;
        }
    }
    let objective_value = objective_raw(x.as_vector(), mu_e, sigma, l, cfg);
    if !objective_value.is_finite() {
        return Err(EapoError::Numerical("objective is not finite".into()));
    }
    Ok((
        x,
        SolveDiagnostics {
            iterations: out.iterations,
            final_projected_gradient_norm: out.pg_norm,
            objective_value,
            turnover_binding,
            converged: out.converged,
            turnover_warning,
        },
    ))
}

/// `max_u { −Γu + max_{x ∈ Δ, L_i x_i ≤ u} xᵀμ − θxᵀΣx }`.
fn solve_epigraph(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
    x0: DVector<f64>,
    eta0: f64,
) -> Result<PgdOutcome> {
    let n = mu_e.len();
    let ones = DVector::from_element(n, 1.0);
    let l = l.unwrap_or(&ones);
    let smooth_cfg = SolverConfig {
        gamma: 0.0,
        ..cfg.clone()
    };
    let inner_eta = default_eta(sigma, &smooth_cfg).max(eta0);
    let caps = |u: f64| l.map(|li| if li > 0.0 { u / li } else { f64::INFINITY });
    let inner = |u: f64, start: &DVector<f64>| -> Result<PgdOutcome> {
        let hi = caps(u);
        let start = project_capped_simplex(start, &hi);
        projected_ascent(
            start,
            inner_eta,
            cfg.tol * 1e-2,
            cfg.max_iters,
            |x| objective_raw(x, mu_e, sigma, None, &smooth_cfg),
            |x| gradient_raw(x, mu_e, sigma, None, &smooth_cfg),
            |v| project_capped_simplex(v, &hi),
        )
    };
    let u_lo = if l.iter().any(|&v| v <= 0.0) {
        0.0
    } else {
        1.0 / l.iter().map(|v| 1.0 / v).sum::<f64>()
    };
    let u_hi = l.max();
    let h = |u: f64, start: &DVector<f64>| -> Result<(f64, PgdOutcome)> {
        let o = inner(u, start)?;
        Ok((o.value - cfg.gamma * u, o))
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (u_lo, u_hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut hc, mut oc) = h(c, &x0)?;
    let (mut hd, mut od) = h(d, &x0)?;
    let mut iterations = oc.iterations + od.iterations;
    for _ in 0..200 {
        if b - a <= 1e-13 * (1.0 + b.abs()) {
            break;
        }
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            od = oc;
            c = b - phi * (b - a);
            let r = h(c, &od.x)?;
            hc = r.0;
            oc = r.1;
            iterations += oc.iterations;
        } else {
            a = c;
            c = d;
            hc = hd;
            oc = od;
            d = a + phi * (b - a);
            let r = h(d, &oc.x)?;
            hd = r.0;
            od = r.1;
            iterations += od.iterations;
        }
    }
    let mut best = if hc >= hd { (hc, oc) } else { (hd, od) };
    for u in [u_lo, u_hi] {
        let (hv, o) = h(u, &best.1.x)?;
        iterations += o.iterations;
        if hv > best.0 {
            best = (hv, o);
        }
    }
    let explicit = SolverConfig {
        absorb_lipschitz: false,
        ..cfg.clone()
    };
    let x = best.1.x;
    Ok(PgdOutcome {
        value: objective_raw(&x, mu_e, sigma, Some(l), &explicit),
        iterations,
        pg_norm: best.1.pg_norm,
        converged: best.1.converged,
        x,
    })
}

/// Optimal value `V*(Γ)` from an equal-weight start.
pub fn optimal_value(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<f64> {
    let ew = WeightVector::equal(mu_e.len());
    Ok(solve_robust_mv(mu_e, sigma, l, cfg, &ew)?.1.objective_value)
}

/// Central difference `−(V*(Γ+δ) − V*(Γ−δ)) / 2δ`.
pub fn shadow_price(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
    delta_gamma: f64,
) -> Result<f64> {
    if delta_gamma.is_nan() || delta_gamma <= 0.0 || cfg.gamma - delta_gamma < 0.0 {
        return Err(EapoError::InvalidInput(format!(
            "need 0 < delta_gamma <= gamma, got delta {delta_gamma} and gamma {}",
            cfg.gamma
        )));
    }
    let at = |g: f64| {
        let c = SolverConfig {
            gamma: g,
            turnover_cap: None,
            ..cfg.clone()
        };
        optimal_value(mu_e, sigma, l, &c)
    };
    let up = at(cfg.gamma + delta_gamma)?;
    let down = at(cfg.gamma - delta_gamma)?;
    Ok(-(up - down) / (2.0 * delta_gamma))
}
