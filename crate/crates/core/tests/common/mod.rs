//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use eapo::data::{
    align_forward_carry, price_panel, rebalance_calendar, synth_generate, AlignedDataset,
    DataConfig, SynthSpec,
};
use eapo::types::business_days;
use eapo::{IntensityPanel, PricePanel, Scope};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Sort-based tail mean with a fractional boundary weight.
pub fn sorted_tail_cvar(losses: &[f64], alpha: f64) -> f64 {
    let mut s = losses.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mass = (1.0 - alpha) * s.len() as f64;
    let whole = mass.floor() as usize;
    let mut acc: f64 = s[..whole.min(s.len())].iter().sum();
    if whole < s.len() {
        acc += (mass - whole as f64) * s[whole];
    }
    acc / mass
}

/// Rockafellar–Uryasev function minimized over the sample points by direct evaluation.
pub fn ru_min(losses: &[f64], alpha: f64) -> f64 {
    let denom = (1.0 - alpha) * losses.len() as f64;
    losses
        .iter()
        .map(|&z| z + losses.iter().map(|l| (l - z).max(0.0)).sum::<f64>() / denom)
        .fold(f64::INFINITY, f64::min)
}

/// `sup_η −η log mean exp(−ℓ/η) − ηρ` by nested log-grid search.
pub fn kl_closed_form(ell: &[f64], rho: f64) -> f64 {
    let lo = ell.iter().cloned().fold(f64::INFINITY, f64::min);
    let g = |eta: f64| {
        let s: f64 = ell.iter().map(|l| (-(l - lo) / eta).exp()).sum::<f64>() / ell.len() as f64;
        lo - eta * s.ln() - eta * rho
    };
    let (mut a, mut b) = (-30.0f64, 15.0f64);
    for _ in 0..60 {
        let pts: Vec<f64> = (0..=40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
        let (k, _) = pts.iter().enumerate().map(|(i, &p)| (i, g(p.exp()))).fold(
            (0, f64::NEG_INFINITY),
            |acc, v| if v.1 > acc.1 { v } else { acc },
        );
        a = pts[k.saturating_sub(1)];
        b = pts[(k + 1).min(40)];
    }
    g((0.5 * (a + b)).exp())
}

/// Euclidean simplex projection by bisection on the KKT threshold.
pub fn simplex_projection_bisection(v: &DVector<f64>) -> DVector<f64> {
    let mass = |tau: f64| v.iter().map(|x| (x - tau).max(0.0)).sum::<f64>();
    let mut lo = v.min() - 1.0;
    let mut hi = v.max();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.map(|x| (x - tau).max(0.0))
}

/// Literal Bartlett-kernel long-run variance with explicit double loops.
pub fn newey_west_literal(d: &[f64], bw: usize) -> f64 {
    let t = d.len();
    let mut mean = 0.0;
    for x in d {
        mean += x;
    }
    mean /= t as f64;
    let mut lrv = 0.0;
    for lag in 0..=bw {
        let mut gamma = 0.0;
        for s in lag..t {
            gamma += (d[s] - mean) * (d[s - lag] - mean);
        }
        gamma /= t as f64;
        let w = if lag == 0 {
            1.0
        } else {
            2.0 * (1.0 - lag as f64 / (bw as f64 + 1.0))
        };
        lrv += w * gamma;
    }
    lrv.max(0.0)
}

/// Random positive-definite covariance `BBᵀ + diag` with the given scale.
pub fn random_covariance(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, 2, |_, _| normal(rng));
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5)));
    (&b * b.transpose() + d) * scale
}

/// Geometric random walk prices, `days × n`.
pub fn random_prices(seed: u64, days: usize, n: usize) -> DMatrix<f64> {
    let mut r = rng(seed);
    let mut p = DMatrix::zeros(days, n);
    for i in 0..n {
        let drift = r.random_range(-2e-4..6e-4);
        let vol = r.random_range(0.008..0.02);
        let mut level = r.random_range(20.0..200.0);
        for d in 0..days {
            if d > 0 {
                level *= (drift + vol * normal(&mut r)).exp();
            }
            p[(d, i)] = level;
        }
    }
    p
}

/// Price panel plus a month-end intensity panel drawn once per asset with small monthly noise.
pub fn small_market(seed: u64, days: usize, n: usize) -> (PricePanel, IntensityPanel) {
    let values = random_prices(seed, days, n);
    let dates = business_days(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), days);
    let tickers: Vec<String> = (0..n).map(|i| format!("A{i:02}")).collect();
    let prices = PricePanel::new(dates, tickers.clone(), values).unwrap();
    let rdates: Vec<NaiveDate> = prices
        .month_end_indices()
        .iter()
        .map(|&i| prices.dates[i])
        .collect();
    let mut r = rng(seed ^ 0x5eed);
    let base: Vec<f64> = (0..n).map(|_| (3.0 + 1.5 * normal(&mut r)).exp()).collect();
    let lam = DMatrix::from_fn(rdates.len(), n, |_, i| {
        base[i] * (0.1 * normal(&mut r)).exp()
    });
    let panel = IntensityPanel::observed(Scope::One, rdates, tickers, lam).unwrap();
    (prices, panel)
}

/// Synthetic dataset aligned with the default data configuration.
pub fn synthetic_dataset(spec: &SynthSpec) -> AlignedDataset {
    let out = synth_generate(spec).unwrap();
    let (prices, _) = price_panel(&out.records).unwrap();
    align_forward_carry(
        &out.records,
        &DataConfig::default(),
        &rebalance_calendar(&prices),
        spec.seed,
    )
    .unwrap()
}
