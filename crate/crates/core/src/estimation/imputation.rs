//! Sector-aware log-normal imputation of missing emissions and revenues.
//!
//! `log C` and `log S` are modelled separately as Gaussian within each
//! sector. Sector means are shrunk toward the global mean by empirical Bayes,
//! with the between-sector variance estimated by method of moments. A sector
//! with fewer than three observations borrows the pooled within-sector
//! variance; a sector with none falls back to the global distribution.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{EapoError, Result};

pub const DEFAULT_DRAWS: usize = 8;

/// Minimum sector size for a sector-specific within variance.
const MIN_SECTOR_OBS: usize = 3;

/// Periods × assets observations; `None` marks a missing entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsObservations {
    /// tCO2e.
    pub emissions: Vec<Vec<Option<f64>>>,
    /// Revenue in $mm.
    pub revenue: Vec<Vec<Option<f64>>>,
}

impl EmissionsObservations {
    pub fn n_periods(&self) -> usize {
        self.emissions.len()
    }

    pub fn n_assets(&self) -> usize {
        self.emissions.first().map_or(0, Vec::len)
    }

    fn validate(&self, n_sectors: usize) -> Result<()> {
        let n = self.n_assets();
        if self.revenue.len() != self.emissions.len() {
            return Err(EapoError::Shape {
                expected: self.emissions.len(),
                got: self.revenue.len(),
            });
        }
        for row in self.emissions.iter().chain(&self.revenue) {
            if row.len() != n {
                return Err(EapoError::Shape {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(EapoError::InvalidInput(
                    "observed emissions and revenues must be positive and finite".into(),
                ));
            }
        }
        if n_sectors != n {
            return Err(EapoError::Shape {
                expected: n,
                got: n_sectors,
            });
        }
        Ok(())
    }
}

/// Predictive distribution of a log quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalPosterior {
    pub n_obs: usize,
    /// Posterior mean of the sector location.
    pub mean: f64,
    /// Posterior variance of the sector location.
    pub mean_variance: f64,
    /// Within-sector variance.
    pub within_variance: f64,
}

impl LogNormalPosterior {
    pub fn predictive_variance(&self) -> f64 {
        self.mean_variance + self.within_variance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorPosterior {
    pub sector: String,
    pub log_emissions: LogNormalPosterior,
    pub log_revenue: LogNormalPosterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationDraws {
    pub k: usize,
    /// Intensity panels (periods × assets), one per draw.
    pub panels: Vec<DMatrix<f64>>,
    pub sector_params: Vec<SectorPosterior>,
    /// True where either emissions or revenue was imputed.
    pub imputed: Vec<Vec<bool>>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Empirical-Bayes fit of one log variable; one posterior per sector.
fn fit_sectors(by_sector: &[Vec<f64>]) -> Vec<LogNormalPosterior> {
    let all: Vec<f64> = by_sector.iter().flatten().copied().collect();
    let n_total = all.len();
    let global_mean = mean(&all);
    let global_var = if n_total > 1 {
        sum_sq_dev(&all) / (n_total - 1) as f64
    } else {
        0.0
    };

    let occupied: Vec<&Vec<f64>> = by_sector.iter().filter(|v| !v.is_empty()).collect();
    let within_ss: f64 = occupied.iter().map(|v| sum_sq_dev(v)).sum();
    let pooled = if n_total > occupied.len() {
        within_ss / (n_total - occupied.len()) as f64
    } else {
        global_var
    };
    let within = |v: &Vec<f64>| {
        if v.len() >= MIN_SECTOR_OBS {
            sum_sq_dev(v) / (v.len() - 1) as f64
        } else {
            pooled
        }
    };
    let between = if occupied.len() > 1 {
        let sector_means: Vec<f64> = occupied.iter().map(|v| mean(v)).collect();
        let var_means = sum_sq_dev(&sector_means) / (sector_means.len() - 1) as f64;
        let noise = mean(
            &occupied
                .iter()
                .map(|v| within(v) / v.len() as f64)
                .collect::<Vec<_>>(),
        );
        (var_means - noise).max(0.0)
    } else {
        0.0
    };

    by_sector
        .iter()
        .map(|v| {
            if v.is_empty() {
                return LogNormalPosterior {
                    n_obs: 0,
                    mean: global_mean,
                    mean_variance: 0.0,
                    within_variance: global_var,
                };
            }
            let n = v.len() as f64;
            let tau2 = within(v);
            let (w, mean_variance) = if between <= 0.0 {
                (0.0, 0.0)
            } else if tau2 <= 0.0 {
                (1.0, 0.0)
            } else {
                (
                    n * between / (n * between + tau2),
                    between * tau2 / (n * between + tau2),
                )
            };
            LogNormalPosterior {
                n_obs: v.len(),
                mean: w * mean(v) + (1.0 - w) * global_mean,
                mean_variance,
                within_variance: tau2,
            }
        })
        .collect()
}

/// Fills missing emissions and revenues with `k` posterior-predictive draws.
///
/// Draw `j` uses the stream seeded with `seed + j`. Observed entries are copied unchanged.
pub fn impute_emissions(
    obs: &EmissionsObservations,
    sectors: &[String],
    k: usize,
    seed: u64,
) -> Result<ImputationDraws> {
    if k == 0 {
        return Err(EapoError::InvalidInput(
            "number of draws must be at least 1".into(),
        ));
    }
    obs.validate(sectors.len())?;
    let (t, n) = (obs.n_periods(), obs.n_assets());

    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for s in sectors {
        let next = index.len();
        index.entry(s.as_str()).or_insert(next);
    }
    let names: Vec<&str> = {
        let mut v = vec![""; index.len()];
        for (name, &i) in &index {
            v[i] = name;
        }
        v
    };
    let sector_of: Vec<usize> = sectors.iter().map(|s| index[s.as_str()]).collect();

    let collect = |table: &Vec<Vec<Option<f64>>>| {
        let mut by = vec![Vec::new(); names.len()];
        for row in table {
            for (i, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    by[sector_of[i]].push(v.ln());
                }
            }
        }
        by
    };
    let c_by = collect(&obs.emissions);
    let s_by = collect(&obs.revenue);
    if c_by.iter().all(Vec::is_empty) || s_by.iter().all(Vec::is_empty) {
        return Err(EapoError::InsufficientData(
            "imputation needs at least one observed emissions and revenue record".into(),
        ));
    }
    let c_post = fit_sectors(&c_by);
    let s_post = fit_sectors(&s_by);

    let imputed: Vec<Vec<bool>> = (0..t)
        .map(|p| {
            (0..n)
                .map(|i| obs.emissions[p][i].is_none() || obs.revenue[p][i].is_none())
                .collect()
        })
        .collect();

    let draw = |post: &LogNormalPosterior, rng: &mut ChaCha8Rng| -> f64 {
        let sd = post.predictive_variance().max(0.0).sqrt();
        let z = Normal::new(post.mean, sd)
            .expect("finite normal parameters")
            .sample(rng);
        z.exp()
    };
    let panels = (0..k)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(j as u64));
            let mut panel = DMatrix::zeros(t, n);
            for p in 0..t {
                for i in 0..n {
                    let s = sector_of[i];
                    let c = obs.emissions[p][i].unwrap_or_else(|| draw(&c_post[s], &mut rng));
                    let r = obs.revenue[p][i].unwrap_or_else(|| draw(&s_post[s], &mut rng));
                    panel[(p, i)] = c / r;
                }
            }
            panel
        })
        .collect();

    let sector_params = names
        .iter()
        .enumerate()
        .map(|(i, name)| SectorPosterior {
            sector: name.to_string(),
            log_emissions: c_post[i],
            log_revenue: s_post[i],
        })
        .collect();
    Ok(ImputationDraws {
        k,
        panels,
        sector_params,
        imputed,
    })
}

/// Elementwise mean across draws.
pub fn average_imputations(draws: &ImputationDraws) -> Result<DMatrix<f64>> {
    let first = draws
        .panels
        .first()
        .ok_or_else(|| EapoError::InvalidInput("no imputation draws".into()))?;
    let mut acc = DMatrix::zeros(first.nrows(), first.ncols());
    for p in &draws.panels {
        if p.shape() != first.shape() {
            return Err(EapoError::Shape {
                expected: first.len(),
                got: p.len(),
            });
        }
        acc += p;
    }
    Ok(acc / draws.panels.len() as f64)
}
