use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EapoError, Result};
use crate::solver::ORACLE_MAX_ASSETS;

pub const MAX_GRID_POINTS: usize = 10_000;
const MAX_HORIZON: usize = 3;
const MAX_DP_ASSETS: usize = 3;
/// Cap on control paths × disturbance paths for the flat oracle.
const MAX_FLAT_PATHS: u128 = 50_000_000;

/// Finite-horizon robust allocation with payoff `xᵀ(γ_t + Δ_t z_t)` in periods `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyDynamicSpec {
    pub gammas: Vec<DVector<f64>>,
    pub deltas: Vec<DMatrix<f64>>,
    pub disturbances: Vec<Vec<DVector<f64>>>,
    pub beta: f64,
    pub grid_step: f64,
}

impl TinyDynamicSpec {
    /// The last period index `T`.
    pub fn horizon(&self) -> usize {
        self.gammas.len().saturating_sub(1)
    }

    pub fn n_assets(&self) -> usize {
        self.gammas.first().map_or(0, |g| g.len())
    }

    pub fn validate(&self) -> Result<()> {
        let periods = self.gammas.len();
        if periods == 0 || periods > MAX_HORIZON + 1 {
            return Err(EapoError::InvalidInput(format!(
                "need 1..={} periods, got {periods}",
                MAX_HORIZON + 1
            )));
        }
        if self.deltas.len() != periods || self.disturbances.len() != periods {
            return Err(EapoError::InvalidInput(
                "gammas, deltas and disturbances must have equal length".into(),
            ));
        }
        let n = self.n_assets();
        if n == 0 || n > MAX_DP_ASSETS {
            return Err(EapoError::InvalidInput(format!(
                "need 1..={MAX_DP_ASSETS} assets, got {n}"
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) && self.beta != 0.0 {
            return Err(EapoError::InvalidInput(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if ![0.05, 0.1, 0.2].contains(&self.grid_step) {
            return Err(EapoError::InvalidInput(format!(
                "grid step must be 0.05, 0.1 or 0.2, got {}",
                self.grid_step
            )));
        }
        for t in 0..periods {
            if self.gammas[t].len() != n || self.deltas[t].nrows() != n {
                return Err(EapoError::Shape {
                    expected: n,
                    got: self.deltas[t].nrows(),
                });
            }
            if self.disturbances[t].is_empty() {
                return Err(EapoError::InvalidInput(format!(
                    "disturbance set {t} is empty"
                )));
            }
            for z in &self.disturbances[t] {
                if z.len() != self.deltas[t].ncols() {
                    return Err(EapoError::Shape {
                        expected: self.deltas[t].ncols(),
                        got: z.len(),
                    });
                }
            }
            let finite = self.gammas[t]
                .iter()
                .chain(self.deltas[t].iter())
                .all(|v| v.is_finite())
                && self.disturbances[t]
                    .iter()
                    .flat_map(|z| z.iter())
                    .all(|v| v.is_finite());
            if !finite {
                return Err(EapoError::InvalidInput(format!(
                    "period {t} has non-finite data"
                )));
            }
        }
        Ok(())
    }
}

/// Random spec with `periods` periods, `n` assets and `n_shocks` scalar disturbances per period.
pub fn random_tiny_spec(
    seed: u64,
    periods: usize,
    n: usize,
    n_shocks: usize,
    grid_step: f64,
) -> TinyDynamicSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |scale: f64| -> f64 {
        scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    };
    let gammas = (0..periods)
        .map(|_| DVector::from_fn(n, |_, _| 0.01 + normal(0.02)))
        .collect();
    let deltas = (0..periods)
        .map(|_| DMatrix::from_fn(n, 1, |_, _| normal(0.05)))
        .collect();
    let disturbances = (0..periods)
        .map(|_| {
            (0..n_shocks)
                .map(|_| DVector::from_element(1, normal(1.0)))
                .collect()
        })
        .collect();
    let beta = rng.random_range(0.8..=1.0);
    TinyDynamicSpec {
        gammas,
        deltas,
        disturbances,
        beta,
        grid_step,
    }
}

/// Realized payoff `xᵀ(γ_t + Δ_t z)`.
pub fn stage_payoff(spec: &TinyDynamicSpec, t: usize, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
    x.dot(&(&spec.gammas[t] + &spec.deltas[t] * z))
}

fn simplex_grid(n: usize, step: f64) -> Result<Vec<DVector<f64>>> {
    let k = (1.0 / step).round() as usize;
    let mut count: u128 = 1;
    for i in 1..n {
        count = count * (k + i) as u128 / i as u128;
    }
    if count > MAX_GRID_POINTS as u128 {
        return Err(EapoError::Refused(format!(
            "simplex grid has {count} points, limit is {MAX_GRID_POINTS}"
        )));
    }
    let mut out = Vec::new();
    let mut parts = vec![0usize; n];
    fn rec(i: usize, left: usize, parts: &mut Vec<usize>, k: usize, out: &mut Vec<DVector<f64>>) {
        let n = parts.len();
        if i == n - 1 {
            parts[i] = left;
            out.push(DVector::from_iterator(
                n,
                parts.iter().map(|&p| p as f64 / k as f64),
            ));
            return;
        }
        for c in 0..=left {
            parts[i] = c;
            rec(i + 1, left - c, parts, k, out);
        }
    }
    rec(0, k, &mut parts, k, &mut out);
    Ok(out)
}

/// Backward recursion `V_t = max_x min_z {s_t(x, z) + β·V_{t+1}}` with `V_{T+1} = 0`.
///
/// The payoff ignores the previous allocation, so `V_t` is the same at every
/// pre-decision state and is carried as a scalar.
pub fn bellman_tiny(spec: &TinyDynamicSpec) -> Result<f64> {
    spec.validate()?;
    let grid = simplex_grid(spec.n_assets(), spec.grid_step)?;
    let mut next = 0.0;
    for t in (0..=spec.horizon()).rev() {
        let carry = spec.beta * next;
        next = grid
            .par_iter()
            .map(|x| {
                spec.disturbances[t]
                    .iter()
                    .map(|z| stage_payoff(spec, t, x, z) + carry)
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    Ok(next)
}

/// Max over open-loop control paths of the min over disturbance paths of the discounted payoff.
pub fn bellman_flat_enumeration(spec: &TinyDynamicSpec) -> Result<f64> {
    spec.validate()?;
    if spec.n_assets() > ORACLE_MAX_ASSETS {
        return Err(EapoError::Refused(
            "flat enumeration limited to small universes".into(),
        ));
    }
    let grid = simplex_grid(spec.n_assets(), spec.grid_step)?;
    let periods = spec.horizon() + 1;
    let controls = (grid.len() as u128).pow(periods as u32);
    let shocks: u128 = spec.disturbances.iter().map(|d| d.len() as u128).product();
    if controls.saturating_mul(shocks) > MAX_FLAT_PATHS {
        return Err(EapoError::Refused(format!(
            "flat enumeration needs {} paths",
            controls.saturating_mul(shocks)
        )));
    }
    let sizes: Vec<usize> = spec.disturbances.iter().map(|d| d.len()).collect();
    let control_sizes = vec![grid.len(); periods];
    let path_value = |xs: &[usize]| -> f64 {
        let mut worst = f64::INFINITY;
        for_each_index(&sizes, |zs| {
            let mut acc = 0.0;
            for t in (0..periods).rev() {
                acc = stage_payoff(spec, t, &grid[xs[t]], &spec.disturbances[t][zs[t]])
                    + spec.beta * acc;
            }
            worst = worst.min(acc);
        });
        worst
    };
    let mut best = f64::NEG_INFINITY;
    for_each_index(&control_sizes, |xs| best = best.max(path_value(xs)));
    Ok(best)
}

/// Visits every multi-index `0 ≤ idx[t] < sizes[t]` in lexicographic order.
fn for_each_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; sizes.len()];
    loop {
        f(&idx);
        let mut t = sizes.len();
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            idx[t] += 1;
            if idx[t] < sizes[t] {
                break;
            }
            idx[t] = 0;
        }
    }
}
