//! Exhaustive barycentric-grid search with lattice refinement, for `n ≤ 4`.

use nalgebra::{DMatrix, DVector};

use super::{check_dims, objective_raw, SolverConfig};
use crate::error::{EapoError, Result};
use crate::types::WeightVector;

pub const ORACLE_MAX_ASSETS: usize = 4;

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        compositions(total - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Best grid point, refined by a shrinking lattice of moves along `e_i − e_n`.
pub fn brute_force_oracle(
    mu_e: &DVector<f64>,
    sigma: &DMatrix<f64>,
    l: Option<&DVector<f64>>,
    cfg: &SolverConfig,
    grid_step: f64,
) -> Result<(WeightVector, f64)> {
    let n = mu_e.len();
    if n > 0 {
        check_dims(n, mu_e, sigma, l)?;
    }
    simplex_grid_search(n, grid_step, |x| objective_raw(x, mu_e, sigma, l, cfg))
}

/// Maximizes `f` over the simplex in `n ≤ 4` dimensions by grid search plus lattice refinement.
pub fn simplex_grid_search(
    n: usize,
    grid_step: f64,
    f: impl Fn(&DVector<f64>) -> f64,
) -> Result<(WeightVector, f64)> {
    if n > ORACLE_MAX_ASSETS {
        return Err(EapoError::Refused(format!(
            "brute-force oracle supports at most {ORACLE_MAX_ASSETS} assets, got {n}"
        )));
    }
    if n == 0 {
        return Err(EapoError::InvalidInput("empty problem".into()));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(EapoError::InvalidInput(format!(
            "grid step must lie in (0, 1], got {grid_step}"
        )));
    }
    let steps = (1.0 / grid_step).round().max(1.0) as usize;
    let mut points = Vec::new();
    compositions(steps, n, &mut Vec::with_capacity(n), &mut points);
    let mut best_x = DVector::zeros(n);
    let mut best_v = f64::NEG_INFINITY;
    for c in &points {
        let x = DVector::from_iterator(n, c.iter().map(|&k| k as f64 / steps as f64));
        let v = f(&x);
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }

    let dims = n - 1;
    let radius: i32 = 2;
    let mut offsets: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..dims {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (-radius..=radius).map(move |k| {
                    let mut o = o.clone();
                    o.push(k);
                    o
                })
            })
            .collect();
    }
    let mut s = 0.5 / steps as f64;
    while dims > 0 && s > 1e-13 {
        let mut improved = false;
        for o in &offsets {
            if o.iter().all(|&k| k == 0) {
                continue;
            }
            let mut y = best_x.clone();
            for (i, &k) in o.iter().enumerate() {
                let d = k as f64 * s;
                y[i] += d;
                y[n - 1] -= d;
            }
            if y.iter().any(|&v| v < 0.0) {
                continue;
            }
            let v = f(&y);
            if v > best_v {
                best_v = v;
                best_x = y;
                improved = true;
            }
        }
        if !improved {
            s *= 0.5;
        }
    }
    let total = best_x.sum();
    best_x /= total;
    let v = f(&best_x);
    let w = WeightVector::new(best_x).map_err(|e| EapoError::Numerical(e.to_string()))?;
    Ok((w, v))
}
