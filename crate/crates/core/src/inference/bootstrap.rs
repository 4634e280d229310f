use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub sharpe_a: f64,
    pub sharpe_b: f64,
    /// Full-sample `sharpe_a − sharpe_b`.
    pub diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replications: usize,
    pub block_length: usize,
    /// Replications drawn again because a resample had zero volatility.
    pub redraws: usize,
}

/// `mean / std · √a` with the `n − 1` standard deviation; `None` for a flat series.
pub fn annualized_sharpe(r: &[f64], annualization: f64) -> Option<f64> {
    let n = r.len();
    if n < 2 {
        return None;
    }
    let m = r.iter().sum::<f64>() / n as f64;
    let sd = (r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    (sd > 0.0).then(|| m / sd * annualization.sqrt())
}

const ANNUALIZATION: f64 = 252.0;
/// Total redraw allowance as a multiple of the number of replications.
const REDRAW_FACTOR: usize = 10;

fn resample_indices(t: usize, block: usize, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
    out.clear();
    while out.len() < t {
        let start = rng.random_range(0..t);
        for k in 0..block {
            if out.len() == t {
                break;
            }
            out.push((start + k) % t);
        }
    }
}

/// Percentile interval for the annualized Sharpe difference under a circular block bootstrap of the pairs.
///
/// Replication `b` draws from ChaCha stream `b` under `seed`, so results do
/// not depend on thread scheduling and nearby seeds share no replications.
/// A replication whose resample has zero volatility in either leg is redrawn
/// from the same stream.
pub fn block_bootstrap_sharpe(
    returns_a: &[f64],
    returns_b: &[f64],
    block_length: usize,
    replications: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let t = returns_a.len();
    if returns_b.len() != t {
        return Err(EapoError::Shape {
            expected: t,
            got: returns_b.len(),
        });
    }
    if block_length == 0 || replications == 0 {
        return Err(EapoError::InvalidInput(
            "block length and replications must be positive".into(),
        ));
    }
    if t < block_length.max(2) {
        return Err(EapoError::InsufficientData(format!(
            "series length {t} is shorter than the block length {block_length}"
        )));
    }
    ensure_finite(
        returns_a.iter().chain(returns_b).copied(),
        "bootstrap returns",
    )?;
    let (sa, sb) = match (
        annualized_sharpe(returns_a, ANNUALIZATION),
        annualized_sharpe(returns_b, ANNUALIZATION),
    ) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(EapoError::InvalidInput(
                "a return series has zero volatility".into(),
            ))
        }
    };

    let budget = REDRAW_FACTOR * replications;
    let draws: Vec<(Option<f64>, usize)> = (0..replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut idx = Vec::with_capacity(t);
            let (mut xa, mut xb) = (vec![0.0; t], vec![0.0; t]);
            let mut redraws = 0;
            loop {
                resample_indices(t, block_length, &mut rng, &mut idx);
                for (k, &i) in idx.iter().enumerate() {
                    xa[k] = returns_a[i];
                    xb[k] = returns_b[i];
                }
                if let (Some(a), Some(b)) = (
                    annualized_sharpe(&xa, ANNUALIZATION),
                    annualized_sharpe(&xb, ANNUALIZATION),
                ) {
                    return (Some(a - b), redraws);
                }
                redraws += 1;
                if redraws > budget {
                    return (None, redraws);
                }
            }
        })
        .collect();
    let redraws: usize = draws.iter().map(|d| d.1).sum();
    if redraws > budget || draws.iter().any(|d| d.0.is_none()) {
        return Err(EapoError::Numerical(format!(
            "bootstrap exceeded {budget} zero-volatility redraws"
        )));
    }
    let mut diffs: Vec<f64> = draws.into_iter().filter_map(|d| d.0).collect();
    diffs.sort_by(f64::total_cmp);
    Ok(BootstrapResult {
        sharpe_a: sa,
        sharpe_b: sb,
        diff: sa - sb,
        ci_low: percentile(&diffs, 0.025),
        ci_high: percentile(&diffs, 0.975),
        replications,
        block_length,
        redraws,
    })
}

/// Linear interpolation between order statistics of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
