use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::records::{EmissionRecord, PriceRecord, RawRecords, RevenueRecord, SectorRecord};
use crate::error::{EapoError, Result};
use crate::types::{business_days, Scope};

/// Parameters of the synthetic market. Daily quantities are in log-return units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_assets: usize,
    pub n_days: usize,
    pub n_sectors: usize,
    /// Exact cross-sectional sample correlation between base intensity and mean daily log return.
    pub intensity_return_corr: f64,
    /// Probability that a (ticker, fiscal year) emissions disclosure is withheld.
    pub missing_rate: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Median intensity in tCO2e per $mm revenue.
    pub median_intensity: f64,
    pub sector_log_sd: f64,
    pub within_log_sd: f64,
    /// Year-to-year log noise in reported emissions.
    pub emissions_noise: f64,
    pub mean_drift: f64,
    pub drift_dispersion: f64,
    pub market_vol: f64,
    pub sector_vol: f64,
    pub idio_vol_min: f64,
    pub idio_vol_max: f64,
    pub confidence_grades: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_assets: 100,
            n_days: 2500,
            n_sectors: 10,
            intensity_return_corr: 0.0,
            missing_rate: 0.1,
            seed: 42,
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
            median_intensity: 30.0,
            sector_log_sd: 1.8,
            within_log_sd: 1.0,
            emissions_noise: 0.05,
            mean_drift: 3e-4,
            drift_dispersion: 2e-4,
            market_vol: 0.009,
            sector_vol: 0.005,
            idio_vol_min: 0.010,
            idio_vol_max: 0.020,
            confidence_grades: false,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 || self.n_days < 2 || self.n_sectors == 0 {
            return Err(EapoError::Config(
                "need n_assets >= 1, n_days >= 2 and n_sectors >= 1".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.intensity_return_corr) {
            return Err(EapoError::Config(
                "intensity_return_corr must lie in [-1, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return Err(EapoError::Config("missing_rate must lie in [0, 1]".into()));
        }
        let nonneg = [
            self.sector_log_sd,
            self.within_log_sd,
            self.emissions_noise,
            self.drift_dispersion,
            self.market_vol,
            self.sector_vol,
            self.idio_vol_min,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            || self.idio_vol_max < self.idio_vol_min
        {
            return Err(EapoError::Config(
                "volatility and dispersion parameters must be nonnegative".into(),
            ));
        }
        if self.median_intensity.is_nan() || self.median_intensity <= 0.0 {
            return Err(EapoError::Config(
                "median_intensity must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Synthetic dataset plus the latent quantities it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub records: RawRecords,
    /// Base intensity per asset.
    pub base_intensity: Vec<f64>,
    /// Realized mean daily log return per asset.
    pub drift: Vec<f64>,
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    for x in v.iter_mut() {
        *x = if sd > 0.0 { (*x - m) / sd } else { 0.0 };
    }
}

/// Vector with mean `mean`, standard deviation `sd`, and sample correlation exactly `rho` with `anchor`.
fn correlated(anchor: &[f64], rho: f64, mean: f64, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = anchor.len();
    let mut a = anchor.to_vec();
    standardize(&mut a);
    let mut z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    standardize(&mut z);
    let proj = z.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    for (x, y) in z.iter_mut().zip(&a) {
        *x -= proj * y;
    }
    standardize(&mut z);
    let anchor_flat = a.iter().all(|v| *v == 0.0);
    let w = if anchor_flat { 0.0 } else { rho };
    (0..n)
        .map(|i| mean + sd * (w * a[i] + (1.0 - w * w).sqrt() * z[i]))
        .collect()
}

fn quarter_ends(year: i32) -> [NaiveDate; 4] {
    [(3, 31), (6, 30), (9, 30), (12, 31)]
        .map(|(m, d)| NaiveDate::from_ymd_opt(year, m, d).expect("valid date"))
}

/// Factor-model prices, sector-clustered log-normal intensities and quarterly revenues.
///
/// Each asset's log returns are demeaned before the drift is added, so the
/// realized mean daily log return equals the drift exactly.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, t, s) = (spec.n_assets, spec.n_days, spec.n_sectors);
    let tickers: Vec<String> = (0..n).map(|i| format!("S{i:04}")).collect();
    let sector_of: Vec<usize> = (0..n).map(|i| i % s).collect();
    let sector_names: Vec<String> = (0..s).map(|k| format!("SEC{k:02}")).collect();

    let normal = |mean: f64, sd: f64| Normal::new(mean, sd).expect("finite parameters");
    let sector_loc: Vec<f64> = (0..s)
        .map(|_| normal(0.0, spec.sector_log_sd).sample(&mut rng))
        .collect();
    let mut log_lambda: Vec<f64> = (0..n)
        .map(|i| sector_loc[sector_of[i]] + normal(0.0, spec.within_log_sd).sample(&mut rng))
        .collect();
    let mut sorted = log_lambda.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    for v in log_lambda.iter_mut() {
        *v += spec.median_intensity.ln() - median;
    }
    let base_intensity: Vec<f64> = log_lambda.iter().map(|v| v.exp()).collect();
    let drift = correlated(
        &base_intensity,
        spec.intensity_return_corr,
        spec.mean_drift,
        spec.drift_dispersion,
        &mut rng,
    );

    let betas: Vec<f64> = (0..n).map(|_| rng.random_range(0.7..1.3)).collect();
    let idio: Vec<f64> = (0..n)
        .map(|_| {
            if spec.idio_vol_max > spec.idio_vol_min {
                rng.random_range(spec.idio_vol_min..spec.idio_vol_max)
            } else {
                spec.idio_vol_min
            }
        })
        .collect();
    let std_normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let market: Vec<f64> = (0..t - 1)
        .map(|_| spec.market_vol * std_normal(&mut rng))
        .collect();
    let sector_f = DMatrix::from_fn(t - 1, s, |_, _| spec.sector_vol * std_normal(&mut rng));
    let mut shocks = DMatrix::from_fn(t - 1, n, |d, i| {
        betas[i] * market[d] + sector_f[(d, sector_of[i])] + idio[i] * std_normal(&mut rng)
    });
    for (i, mut col) in shocks.column_iter_mut().enumerate() {
        let m = col.mean();
        col.add_scalar_mut(drift[i] - m);
    }

    let dates = business_days(spec.start_date, t);
    let start_price: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..100.0)).collect();
    let mut prices = Vec::with_capacity(n * t);
    for (i, ticker) in tickers.iter().enumerate() {
        let mut log_p = start_price[i].ln();
        for (d, date) in dates.iter().enumerate() {
            if d > 0 {
                log_p += shocks[(d - 1, i)];
            }
            prices.push(PriceRecord {
                date: *date,
                ticker: ticker.clone(),
                adjusted_close: log_p.exp(),
            });
        }
    }

    let first_year = dates[0].year() - 1;
    let last_year = dates[t - 1].year();
    let grades = ["A", "B", "C", "D"];
    let mut revenues = Vec::new();
    let mut emissions = Vec::new();
    for (i, ticker) in tickers.iter().enumerate() {
        let mut annual = normal(22.0, 1.0).sample(&mut rng).exp();
        for year in first_year..=last_year {
            let mut fy_total = 0.0;
            for q in quarter_ends(year) {
                let rev = annual / 4.0 * normal(0.0, 0.03).sample(&mut rng).exp();
                fy_total += rev;
                revenues.push(RevenueRecord {
                    ticker: ticker.clone(),
                    quarter_end: q,
                    revenue_usd: rev,
                });
            }
            let c = base_intensity[i] * fy_total / 1e6
                * normal(0.0, spec.emissions_noise).sample(&mut rng).exp();
            let withheld = rng.random::<f64>() < spec.missing_rate;
            let confidence = spec
                .confidence_grades
                .then(|| grades[rng.random_range(0..grades.len())].to_string());
            if year < last_year && !withheld {
                emissions.push(EmissionRecord {
                    ticker: ticker.clone(),
                    fiscal_year: year,
                    scope: Scope::One,
                    tco2e: c,
                    confidence,
                });
            }
            annual *= normal(0.03, 0.05).sample(&mut rng).exp();
        }
    }
    let sectors = tickers
        .iter()
        .zip(&sector_of)
        .map(|(t, &k)| SectorRecord {
            ticker: t.clone(),
            sector: sector_names[k].clone(),
        })
        .collect();
    Ok(SynthOutput {
        records: RawRecords {
            prices,
            emissions,
            revenues,
            sectors,
        },
        base_intensity,
        drift,
    })
}
