use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, EapoError, Result};
use crate::solver::{
    check_dims, penalty_gradient, penalty_term, project_simplex_raw, solve_robust_mv, SolverConfig,
};
use crate::types::WeightVector;

/// Equally likely scenarios of emissions-adjusted gross returns (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    scenarios: DMatrix<f64>,
}

impl ScenarioSet {
    pub fn new(scenarios: DMatrix<f64>) -> Result<Self> {
        if scenarios.nrows() == 0 || scenarios.ncols() == 0 {
            return Err(EapoError::InvalidInput("scenario set is empty".into()));
        }
        ensure_finite(scenarios.iter().copied(), "scenarios")?;
        Ok(Self { scenarios })
    }

    pub fn scenarios(&self) -> &DMatrix<f64> {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.nrows() == 0
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(EapoError::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// `min_ν ν + Σ(ℓ_s − ν)₊ / ((1 − α)M)`, evaluated at every breakpoint.
pub fn cvar_empirical(losses: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if losses.is_empty() {
        return Err(EapoError::InvalidInput("loss sample is empty".into()));
    }
    ensure_finite(losses.iter().copied(), "losses")?;
    let mut sorted = losses.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let denom = (1.0 - alpha) * sorted.len() as f64;
    let mut best = f64::INFINITY;
    let mut excess_sum = 0.0;
    for (k, &nu) in sorted.iter().enumerate() {
        // Losses strictly above ν are the first k entries.
        let above: f64 = excess_sum - k as f64 * nu;
        best = best.min(nu + above / denom);
        excess_sum += nu;
    }
    Ok(best)
}

/// Probability weights of the CVaR tail (fractional at the boundary), summing to one.
pub fn tail_weights(losses: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let m = losses.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    let mass = (1.0 - alpha) * m as f64;
    let mut w = vec![0.0; m];
    let mut left = mass;
    for &i in &order {
        if left <= 0.0 {
            break;
        }
        let take = left.min(1.0);
        w[i] = take / mass;
        left -= take;
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvarSolution {
    pub weights: WeightVector,
    pub objective_value: f64,
    pub iterations: usize,
}

/// Subgradient phases: each restarts from the best point with a smaller scale.
const CVAR_PHASES: usize = 6;
const CVAR_PHASE_ITERS: usize = 4000;

/// Maximizes `xᵀμᵉ − Γ‖diag(L)x‖_q − β·CVaR_α(−xᵀRᵉ)` over the simplex by projected subgradient.
pub fn solve_robust_cvar(
    scenarios: &ScenarioSet,
    alpha: f64,
    beta: f64,
    mu_e: &DVector<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
) -> Result<CvarSolution> {
    check_alpha(alpha)?;
    cfg.validate()?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(EapoError::InvalidInput(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let n = mu_e.len();
    let r = scenarios.scenarios();
    if r.ncols() != n {
        return Err(EapoError::Shape {
            expected: n,
            got: r.ncols(),
        });
    }
    check_dims(n, mu_e, &DMatrix::zeros(n, n), l)?;
    let linear_cfg = SolverConfig {
        theta: 0.0,
        turnover_cap: None,
        ..cfg.clone()
    };
    if beta == 0.0 {
        let (weights, d) = solve_robust_mv(
            mu_e,
            &DMatrix::zeros(n, n),
            l,
            &linear_cfg,
            &WeightVector::equal(n),
        )?;
        return Ok(CvarSolution {
            weights,
            objective_value: d.objective_value,
            iterations: d.iterations,
        });
    }

    let losses = |x: &DVector<f64>| -> Vec<f64> { (r * x).iter().map(|v| -v).collect() };
    let f = |x: &DVector<f64>| -> f64 {
        let c = cvar_empirical(&losses(x), alpha).expect("validated alpha");
        x.dot(mu_e) - penalty_term(x, l, &linear_cfg) - beta * c
    };
    let supergradient = |x: &DVector<f64>| -> DVector<f64> {
        let w = tail_weights(&losses(x), alpha).expect("validated alpha");
        let tail_mean = r.transpose() * DVector::from_vec(w);
        mu_e - penalty_gradient(x, l, &linear_cfg) + tail_mean * beta
    };

    let scale = mu_e.amax() + cfg.gamma * l.map_or(1.0, |v| v.amax()) + beta * r.amax() + 1e-12;
    let mut best = DVector::from_element(n, 1.0 / n as f64);
    let mut best_v = f(&best);
    let mut c = 0.5 / scale;
    let mut iterations = 0;
    for _ in 0..CVAR_PHASES {
        let mut x = best.clone();
        for k in 0..CVAR_PHASE_ITERS {
            iterations += 1;
            let g = supergradient(&x);
            if !g.iter().all(|v| v.is_finite()) {
                return Err(EapoError::Numerical("non-finite CVaR subgradient".into()));
            }
            // Normalize by the component tangent to the simplex; the common shift is projected away.
            let g = g.add_scalar(-g.mean());
            let gn = g.norm();
            if gn <= 1e-300 {
                break;
            }
            x = project_simplex_raw(&(&x + g * (c / ((k + 1) as f64).sqrt() / gn)));
            let v = f(&x);
            if v > best_v {
                best_v = v;
                best = x.clone();
            }
        }
        c *= 0.2;
    }
    Ok(CvarSolution {
        weights: WeightVector::new(best).map_err(|e| EapoError::Numerical(e.to_string()))?,
        objective_value: best_v,
        iterations,
    })
}
