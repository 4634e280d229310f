//! Library results against independently written oracles.

mod common;

use common::*;
use eapo::ambiguity::BallNorm;
use eapo::data::{InferenceConfig, RunConfig};
use eapo::estimation::{
    average_imputations, impute_emissions, ledoit_wolf, rolling_mean, EmissionsObservations,
    ImputationDraws, ShrinkageTarget,
};
use eapo::penalty::{emissions_adjusted_mean, PenaltyParams};
use eapo::solver::{
    brute_force_oracle, objective, optimal_value, project_turnover, shadow_price, solve_robust_mv,
    SolverConfig,
};
use eapo::{IntensityVector, Scope, WeightVector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[test]
fn adjusted_mean_is_factor_times_mean() {
    let mut g = rng(1);
    let window = DMatrix::from_fn(252, 5, |_, _| 5e-4 + 0.02 * normal(&mut g));
    let lam = IntensityVector::new(
        DVector::from_fn(5, |_, _| g.random_range(0.0..200.0)),
        Scope::Two,
    )
    .unwrap();
    let m = 7;
    let got =
        emissions_adjusted_mean(&window, &lam, PenaltyParams::new(m, Scope::Two).unwrap()).unwrap();
    let lmax = lam.values().max();
    for j in 0..5 {
        let mut acc = 0.0;
        for t in 0..252 {
            acc += window[(t, j)] * (1.0 - lam.values()[j] / lmax).powf(m as f64);
        }
        assert!((got[j] - acc / 252.0).abs() < 1e-12);
    }
}

/// Constant-correlation shrinkage intensity written out with explicit sums over time.
fn lw_delta_oracle(x: &DMatrix<f64>) -> f64 {
    let (t, n) = x.shape();
    let tf = t as f64;
    let m: Vec<f64> = (0..n)
        .map(|j| (0..t).map(|s| x[(s, j)]).sum::<f64>() / tf)
        .collect();
    let c = |s: usize, j: usize| x[(s, j)] - m[j];
    let cov = |i: usize, j: usize| (0..t).map(|s| c(s, i) * c(s, j)).sum::<f64>() / tf;
    let mut rbar = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rbar += cov(i, j) / (cov(i, i) * cov(j, j)).sqrt();
            }
        }
    }
    rbar /= (n * (n - 1)) as f64;
    let (mut pi, mut rho, mut gamma) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let sij = cov(i, j);
            let pij = (0..t)
                .map(|s| (c(s, i) * c(s, j) - sij).powi(2))
                .sum::<f64>()
                / tf;
            pi += pij;
            if i == j {
                rho += pij;
                continue;
            }
            let (sii, sjj) = (cov(i, i), cov(j, j));
            let th_i = (0..t)
                .map(|s| (c(s, i).powi(2) - sii) * (c(s, i) * c(s, j) - sij))
                .sum::<f64>()
                / tf;
            let th_j = (0..t)
                .map(|s| (c(s, j).powi(2) - sjj) * (c(s, i) * c(s, j) - sij))
                .sum::<f64>()
                / tf;
            rho += 0.5 * rbar * ((sjj / sii).sqrt() * th_i + (sii / sjj).sqrt() * th_j);
            gamma += (rbar * (sii * sjj).sqrt() - sij).powi(2);
        }
    }
    ((pi - rho) / gamma / tf).clamp(0.0, 1.0)
}

#[test]
fn shrinkage_intensity_matches_reimplementation() {
    for seed in 0..20 {
        let mut g = rng(seed);
        let (t, n) = (g.random_range(5..40), g.random_range(3..7));
        let x = DMatrix::from_fn(t, n, |_, _| 0.01 * normal(&mut g));
        let got = ledoit_wolf(&x, ShrinkageTarget::ConstantCorrelation)
            .unwrap()
            .delta;
        let want = lw_delta_oracle(&x);
        assert!((got - want).abs() < 1e-10, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn two_assets_shrink_to_the_sample_covariance() {
    // With two assets the constant-correlation target coincides with S, whatever δ is.
    let mut g = rng(40);
    let x = DMatrix::from_fn(10, 2, |_, _| 0.01 * normal(&mut g));
    let got = ledoit_wolf(&x, ShrinkageTarget::ConstantCorrelation).unwrap();
    let m: Vec<f64> = (0..2).map(|j| x.column(j).sum() / 10.0).collect();
    for i in 0..2 {
        for j in 0..2 {
            let s = (0..10)
                .map(|t| (x[(t, i)] - m[i]) * (x[(t, j)] - m[j]))
                .sum::<f64>()
                / 10.0;
            assert!((got.sigma_hat[(i, j)] - s).abs() < 1e-15 + got.jitter);
        }
    }
}

#[test]
fn rolling_mean_matches_two_pass_sum() {
    let mut g = rng(2);
    let w = DMatrix::from_fn(252, 3, |_, _| 1e-3 + 0.02 * normal(&mut g));
    let got = rolling_mean(&w).unwrap();
    for j in 0..3 {
        let col: Vec<f64> = w.column(j).iter().copied().collect();
        let first = col.iter().sum::<f64>() / 252.0;
        let corrected = first + col.iter().map(|v| v - first).sum::<f64>() / 252.0;
        assert!((got[j] - corrected).abs() < 1e-14);
    }
}

#[test]
fn average_imputations_matches_streaming_mean() {
    let mut g = rng(3);
    let panels: Vec<DMatrix<f64>> = (0..8)
        .map(|_| DMatrix::from_fn(4, 6, |_, _| g.random_range(1.0..500.0)))
        .collect();
    let draws = ImputationDraws {
        k: 8,
        panels: panels.clone(),
        sector_params: Vec::new(),
        imputed: vec![vec![false; 6]; 4],
    };
    let got = average_imputations(&draws).unwrap();
    let mut running = DMatrix::zeros(4, 6);
    for (k, p) in panels.iter().enumerate() {
        running += (p - &running) / (k + 1) as f64;
    }
    assert!((got - running).amax() < 1e-14 * 500.0);
}

#[test]
fn imputed_mean_converges_with_more_periods() {
    // Log emissions and log revenue are Gaussian per sector; the true mean intensity of a missing cell is exp(μc − μs + (σc² + σs²)/2).
    let (mu_c, mu_s, sd_c, sd_s): (f64, f64, f64, f64) = (11.0, 7.0, 0.6, 0.4);
    let truth = (mu_c - mu_s + 0.5 * (sd_c * sd_c + sd_s * sd_s)).exp();
    let n = 30;
    let sectors = vec!["only".to_string(); n];
    let error_at = |periods: usize| {
        let mut errs: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut g = rng(seed);
                let mut emissions = vec![vec![None; n]; periods];
                let mut revenue = vec![vec![None; n]; periods];
                for p in 0..periods {
                    for i in 0..n {
                        let c = (mu_c + sd_c * normal(&mut g)).exp();
                        let s = (mu_s + sd_s * normal(&mut g)).exp();
                        if g.random::<f64>() > 0.3 {
                            emissions[p][i] = Some(c);
                        }
                        if g.random::<f64>() > 0.3 {
                            revenue[p][i] = Some(s);
                        }
                    }
                }
                let obs = EmissionsObservations { emissions, revenue };
                let draws = impute_emissions(&obs, &sectors, 10, seed).unwrap();
                let avg = average_imputations(&draws).unwrap();
                let (mut sum, mut count) = (0.0, 0);
                for p in 0..periods {
                    for i in 0..n {
                        if draws.imputed[p][i] {
                            sum += avg[(p, i)];
                            count += 1;
                        }
                    }
                }
                (sum / count as f64 - truth).abs() / truth
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        0.5 * (errs[9] + errs[10])
    };
    let errors: Vec<f64> = [2, 8, 32].into_iter().map(error_at).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn objective_matches_term_by_term_evaluation() {
    for seed in 0..30u64 {
        let mut g = rng(100 + seed);
        let n = g.random_range(1..8usize);
        let mu = DVector::from_fn(n, |_, _| g.random_range(-0.1..0.3));
        let sigma = random_covariance(&mut g, n, 0.05);
        let l = DVector::from_fn(n, |_, _| g.random_range(0.0..2.0));
        let p = [BallNorm::L1, BallNorm::L2, BallNorm::LInf][seed as usize % 3];
        let cfg = SolverConfig {
            gamma: g.random_range(0.0..2.0),
            theta: g.random_range(0.0..3.0),
            p,
            absorb_lipschitz: seed % 2 == 0,
            ..SolverConfig::default()
        };
        let raw: Vec<f64> = (0..n).map(|_| g.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let x: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mut lin = 0.0;
        for i in 0..n {
            lin += x[i] * mu[i];
        }
        let scaled: Vec<f64> = (0..n)
            .map(|i| x[i] * if cfg.absorb_lipschitz { 1.0 } else { l[i] })
            .collect();
        let norm = match p {
            BallNorm::L1 => scaled.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            BallNorm::L2 => scaled.iter().map(|v| v * v).sum::<f64>().sqrt(),
            BallNorm::LInf => scaled.iter().map(|v| v.abs()).sum(),
        };
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += x[i] * sigma[(i, j)] * x[j];
            }
        }
        let want = lin - cfg.gamma * norm - cfg.theta * quad;
        let w = WeightVector::new(DVector::from_vec(x)).unwrap();
        let got = objective(&w, &mu, &sigma, Some(&l), &cfg).unwrap();
        assert!((got - want).abs() < 1e-12, "seed {seed}: {got} vs {want}");
    }
}

/// Exact Euclidean projection onto `{y ∈ Δ₃ : ‖y − p‖₁ ≤ τ}` by enumerating active sets of at most two constraints.
fn turnover_oracle(x: &DVector<f64>, prev: &DVector<f64>, tau: f64) -> DVector<f64> {
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..3 {
        let mut a = DVector::zeros(3);
        a[i] = -1.0;
        rows.push((a, 0.0));
    }
    for mask in 0..8 {
        let s = DVector::from_fn(3, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
        let b = tau + s.dot(prev);
        rows.push((s, b));
    }
    let feasible = |y: &DVector<f64>| {
        rows.iter().all(|(a, b)| a.dot(y) <= b + 1e-12) && (y.sum() - 1.0).abs() < 1e-12
    };
    let project = |active: &[usize]| -> Option<DVector<f64>> {
        let k = active.len() + 1;
        let mut a = DMatrix::zeros(k, 3);
        let mut b = DVector::zeros(k);
        a.row_mut(0).fill(1.0);
        b[0] = 1.0;
        for (r, &i) in active.iter().enumerate() {
            a.row_mut(r + 1).copy_from(&rows[i].0.transpose());
            b[r + 1] = rows[i].1;
        }
        let gram = &a * a.transpose();
        let lu = gram.lu();
        let lam = lu.solve(&(&a * x - b))?;
        if !lam.iter().all(|v| v.is_finite()) || lu.determinant().abs() < 1e-12 {
            return None;
        }
        Some(x - a.transpose() * lam)
    };
    let mut best: Option<DVector<f64>> = None;
    let mut consider = |y: Option<DVector<f64>>| {
        if let Some(y) = y.filter(|y| feasible(y)) {
            if best
                .as_ref()
                .is_none_or(|b| (&y - x).norm() < (b - x).norm())
            {
                best = Some(y);
            }
        }
    };
    consider(project(&[]));
    for i in 0..rows.len() {
        consider(project(&[i]));
        for j in i + 1..rows.len() {
            consider(project(&[i, j]));
        }
    }
    best.expect("feasible set is nonempty")
}

#[test]
fn turnover_projection_matches_active_set_oracle() {
    for seed in 0..500u64 {
        let mut g = rng(200 + seed);
        let point = |g: &mut rand_chacha::ChaCha8Rng| {
            let v = DVector::from_fn(3, |_, _| g.random_range(0.0..1.0));
            &v / v.sum()
        };
        let x = point(&mut g);
        let prev = point(&mut g);
        let tau = g.random_range(0.01..1.0);
        let got = project_turnover(
            &WeightVector::new(x.clone()).unwrap(),
            &WeightVector::new(prev.clone()).unwrap(),
            tau,
        );
        let want = turnover_oracle(&x, &prev, tau);
        let (dg, dw) = ((got.weights.as_vector() - &x).norm(), (&want - &x).norm());
        assert!((dg - dw).abs() < 1e-6, "seed {seed}: {dg} vs {dw}");
        assert!((got.weights.as_vector() - &prev).lp_norm(1) <= tau + 1e-8);
    }
}

#[test]
fn grid_oracle_refinement_is_stable() {
    for seed in 0..10u64 {
        let mut g = rng(300 + seed);
        let n = 3;
        let mu = DVector::from_fn(n, |_, _| g.random_range(0.0..0.3));
        let sigma = random_covariance(&mut g, n, 0.05);
        let cfg = SolverConfig {
            gamma: 0.3,
            theta: 0.5,
            ..SolverConfig::default()
        };
        let values: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| brute_force_oracle(&mu, &sigma, None, &cfg, h).unwrap().1)
            .collect();
        assert!(
            (values[0] - values[1]).abs() < 0.01 && (values[1] - values[2]).abs() < 0.0025 * 0.25
        );
        let (_, solved) =
            solve_robust_mv(&mu, &sigma, None, &cfg, &WeightVector::equal(n)).unwrap();
        assert!((solved.objective_value - values[2]).abs() < 1e-6);
    }
}

#[test]
fn shadow_price_limits() {
    // Linear penalty (q = 1) with the cleanest asset far ahead: the optimum stays at that vertex.
    let mu = DVector::from_vec(vec![0.10, 0.09, 0.08]);
    let sigma = DMatrix::identity(3, 3) * 1e-3;
    let l = DVector::from_vec(vec![0.1, 2.0, 3.0]);
    let cfg = SolverConfig {
        gamma: 5.0,
        theta: 0.5,
        p: BallNorm::LInf,
        absorb_lipschitz: false,
        ..SolverConfig::default()
    };
    let (x, _) = solve_robust_mv(&mu, &sigma, Some(&l), &cfg, &WeightVector::equal(3)).unwrap();
    assert!((x.as_vector()[0] - 1.0).abs() < 1e-9);
    let pi = shadow_price(&mu, &sigma, Some(&l), &cfg, 0.5).unwrap();
    assert!((pi - 0.1).abs() < 1e-9);

    // Near Γ = 0 the derivative is the penalty norm at the non-robust optimum.
    let mut g = rng(5);
    let mu = DVector::from_fn(4, |_, _| g.random_range(0.05..0.1));
    let sigma = random_covariance(&mut g, 4, 0.05);
    let l = DVector::from_fn(4, |_, _| g.random_range(0.5..1.5));
    let base = SolverConfig {
        theta: 2.0,
        absorb_lipschitz: false,
        tol: 1e-12,
        ..SolverConfig::default()
    };
    let (x0, _) = solve_robust_mv(
        &mu,
        &sigma,
        Some(&l),
        &SolverConfig {
            gamma: 0.0,
            ..base.clone()
        },
        &WeightVector::equal(4),
    )
    .unwrap();
    assert!(x0.as_vector().min() > 1e-3);
    let direct = x0.as_vector().component_mul(&l).norm();
    let pi = shadow_price(
        &mu,
        &sigma,
        Some(&l),
        &SolverConfig {
            gamma: 1e-5,
            ..base.clone()
        },
        1e-5,
    )
    .unwrap();
    assert!((pi - direct).abs() < 1e-3 * direct, "{pi} vs {direct}");

    // Overwhelming risk aversion with Σ = I forces equal weights.
    let cfg = SolverConfig {
        gamma: 0.5,
        theta: 1e4,
        ..base
    };
    let pi = shadow_price(&mu, &DMatrix::identity(4, 4), Some(&l), &cfg, 0.1).unwrap();
    let ew = (l.map(|v| v * v).sum()).sqrt() / 4.0;
    assert!((pi - ew).abs() < 1e-3 * ew, "{pi} vs {ew}");
    assert!(optimal_value(&mu, &DMatrix::identity(4, 4), Some(&l), &cfg)
        .unwrap()
        .is_finite());
}

#[test]
fn reference_settings_are_the_defaults() {
    let run = RunConfig::default();
    assert_eq!(
        (run.solver.gamma, run.solver.m, run.solver.theta),
        (3.5, 10, 0.5)
    );
    assert_eq!(run.backtest.lookback, 252);
    assert_eq!(run.backtest.cost_bps, 2.0);
    let inf = InferenceConfig::default();
    assert_eq!((inf.block_length, inf.replications), (20, 2000));
    // Reference full-universe average intensities, equal weight against EAPO.
    let (ew, eapo) = (246.066_f64, 18.297_f64);
    let reduction = 1.0 - eapo / ew;
    assert!((reduction - 0.9256).abs() < 1e-4 && reduction > 0.8);
}
