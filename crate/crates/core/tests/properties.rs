//! Property tests for the invariants of each module.

mod common;

use common::*;
use eapo::ambiguity::{dual_norm_penalty, ellipse_stats, AmbiguityBall, BallNorm};
use eapo::estimation::{impute_emissions, ledoit_wolf, EmissionsObservations, ShrinkageTarget};
use eapo::frontier::{pareto_sweep, FrontierPoint};
use eapo::inference::{block_bootstrap_sharpe, newey_west};
use eapo::penalty::{
    emissions_adjusted_mean, lipschitz_constants, penalty, penalty_factor, PenaltyParams,
};
use eapo::risk::{cvar_empirical, dro_dual_value, DivergenceBall, DivergenceFamily};
use eapo::solver::{
    brute_force_oracle, gradient, objective, optimal_value, project_simplex, solve_robust_mv,
    SolverConfig,
};
use eapo::{IntensityVector, Scope, WeightVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn simplex_point(raw: &[f64]) -> WeightVector {
    let v = DVector::from_column_slice(raw);
    WeightVector::new(&v / v.sum()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn penalty_semigroup(r in -5.0..5.0f64, lmax in 0.1..400.0f64, u in 0.0..=1.0f64, m1 in 1u32..=6, m2 in 1u32..=6) {
        let lam = u * lmax;
        let once = penalty(r, lam, lmax, m1 + m2).unwrap();
        let twice = penalty(penalty(r, lam, lmax, m2).unwrap(), lam, lmax, m1).unwrap();
        prop_assert!(close(once, twice, 1e-12));
    }

    #[test]
    fn penalty_homogeneity(r in -5.0..5.0f64, a in 0.0..10.0f64, lmax in 0.1..400.0f64, u in 0.0..=1.0f64, m in 1u32..=12) {
        let lam = u * lmax;
        prop_assert!(close(penalty(a * r, lam, lmax, m).unwrap(), a * penalty(r, lam, lmax, m).unwrap(), 1e-12));
    }

    #[test]
    fn penalty_unit_scale_invariance(r in -5.0..5.0f64, beta in 1e-3..1e3f64, lmax in 0.1..400.0f64, u in 0.0..=1.0f64, m in 1u32..=12) {
        let lam = u * lmax;
        prop_assert!(close(penalty(r, beta * lam, beta * lmax, m).unwrap(), penalty(r, lam, lmax, m).unwrap(), 1e-12));
    }

    #[test]
    fn penalty_mixture_linearity(r in -5.0..5.0f64, w in 0.0..=1.0f64, lmax in 0.1..400.0f64, u1 in 0.0..=1.0f64, u2 in 0.0..=1.0f64) {
        let (l1, l2) = (u1 * lmax, u2 * lmax);
        let mixed = penalty(r, w * l1 + (1.0 - w) * l2, lmax, 1).unwrap();
        let blend = w * penalty(r, l1, lmax, 1).unwrap() + (1.0 - w) * penalty(r, l2, lmax, 1).unwrap();
        prop_assert!(close(mixed, blend, 1e-12));
    }

    #[test]
    fn penalty_monotone_in_intensity(r in 0.0..5.0f64, lmax in 0.1..400.0f64, u1 in 0.0..=1.0f64, u2 in 0.0..=1.0f64, m in 1u32..=12) {
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        prop_assert!(penalty(r, hi * lmax, lmax, m).unwrap() <= penalty(r, lo * lmax, lmax, m).unwrap());
    }

    #[test]
    fn penalty_midpoint_convex_on_grid(r in 0.0..5.0f64, lmax in 0.1..400.0f64, m in 1u32..=12) {
        let grid: Vec<f64> = (0..100).map(|i| lmax * i as f64 / 99.0).collect();
        for w in grid.windows(3) {
            let mid = penalty(r, w[1], lmax, m).unwrap();
            let chord = 0.5 * (penalty(r, w[0], lmax, m).unwrap() + penalty(r, w[2], lmax, m).unwrap());
            prop_assert!(mid <= chord + 1e-12);
        }
    }

    #[test]
    fn lipschitz_bounds_finite_differences(seed in 0u64..1000, m in 1u32..=12) {
        let mut g = rng(seed);
        let abs_mean = g.random_range(0.001..0.05);
        let mean = abs_mean * g.random_range(-1.0..1.0);
        let lmax = g.random_range(1.0..300.0);
        let l = lipschitz_constants(&DVector::from_element(1, abs_mean), lmax, m).unwrap()[0];
        let h = lmax * 1e-6;
        for i in 1..=100 {
            let lam = lmax * i as f64 / 101.0;
            let d = (penalty_factor(lam + h, lmax, m) - penalty_factor(lam - h, lmax, m)) / (2.0 * h) * mean;
            prop_assert!(d.abs() <= l * (1.0 + 1e-6));
        }
    }

    #[test]
    fn adjusted_mean_schur_convex_at_equal_weights(seed in 0u64..1000, n in 2usize..8, transfers in 1usize..10) {
        let mut g = rng(seed);
        let r = g.random_range(0.0..0.01);
        let lmax = 100.0;
        let mut lam: Vec<f64> = (0..n).map(|_| g.random_range(0.0..lmax)).collect();
        let window = DMatrix::from_element(3, n, r);
        let params = PenaltyParams::new(1 + seed as u32 % 10, Scope::One).unwrap();
        let value = |l: &[f64]| {
            let iv = IntensityVector::with_lambda_max(DVector::from_column_slice(l), Scope::One, lmax).unwrap();
            emissions_adjusted_mean(&window, &iv, params).unwrap().sum() / n as f64
        };
        for _ in 0..transfers {
            let before = value(&lam);
            let (i, j) = (g.random_range(0..n), g.random_range(0..n));
            let (rich, poor) = if lam[i] >= lam[j] { (i, j) } else { (j, i) };
            let t = g.random_range(0.0..=0.5) * (lam[rich] - lam[poor]);
            lam[rich] -= t;
            lam[poor] += t;
            prop_assert!(before >= value(&lam) - 1e-15);
        }
    }

    #[test]
    fn dual_norm_penalty_homogeneous_and_convex(seed in 0u64..1000, n in 1usize..8, p in 0usize..3, c in 0.01..10.0f64) {
        let mut g = rng(seed);
        let p = [BallNorm::L1, BallNorm::L2, BallNorm::LInf][p];
        let l = DVector::from_fn(n, |_, _| g.random_range(0.0..2.0));
        let gamma = g.random_range(0.1..5.0);
        let x = simplex_point(&(0..n).map(|_| g.random_range(0.01..1.0)).collect::<Vec<_>>());
        let y = simplex_point(&(0..n).map(|_| g.random_range(0.01..1.0)).collect::<Vec<_>>());
        let ball = AmbiguityBall::new(p, gamma).unwrap();
        let scaled = AmbiguityBall::new(p, c * gamma).unwrap();
        let px = dual_norm_penalty(&x, &l, &ball).unwrap();
        prop_assert!(close(dual_norm_penalty(&x, &l, &scaled).unwrap(), c * px, 1e-12 * (1.0 + c * px)));
        let mid = WeightVector::new((x.as_vector() + y.as_vector()) * 0.5).unwrap();
        let py = dual_norm_penalty(&y, &l, &ball).unwrap();
        prop_assert!(dual_norm_penalty(&mid, &l, &ball).unwrap() <= 0.5 * (px + py) + 1e-12);
    }

    #[test]
    fn ellipse_area_rotation_invariant(a in 0.01..5.0f64, d in 0.01..5.0f64, rho in -0.95..0.95f64, angle in 0.0..std::f64::consts::TAU) {
        let b = rho * (a * d).sqrt();
        let cov = DMatrix::from_row_slice(2, 2, &[a, b, b, d]);
        let (s, c) = angle.sin_cos();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let mut rotated = &q * &cov * q.transpose();
        let off = 0.5 * (rotated[(0, 1)] + rotated[(1, 0)]);
        rotated[(0, 1)] = off;
        rotated[(1, 0)] = off;
        let e1 = ellipse_stats(&cov, 0.95).unwrap();
        let e2 = ellipse_stats(&rotated, 0.95).unwrap();
        prop_assert!(close(e1.area, e2.area, 1e-10));
        prop_assert!(e1.axis1 >= e1.axis2 && e1.axis2 >= 0.0);
        prop_assert!(close(e1.area, std::f64::consts::PI * e1.axis1 * e1.axis2, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shrinkage_symmetric_and_positive_definite(seed in 0u64..10_000, t in 2usize..40, n in 1usize..12) {
        let mut g = rng(seed);
        let window = DMatrix::from_fn(t, n, |_, _| 0.01 * normal(&mut g));
        let res = ledoit_wolf(&window, ShrinkageTarget::ConstantCorrelation).unwrap();
        let s = &res.sigma_hat;
        prop_assert!((s - s.transpose()).amax() <= 1e-12);
        prop_assert!(s.clone().symmetric_eigen().eigenvalues.min() >= 1e-10 * 0.999);
        prop_assert!((0.0..=1.0).contains(&res.delta));
    }

    #[test]
    fn imputation_keeps_observed_and_stays_positive(seed in 0u64..10_000, t in 1usize..4, n in 2usize..10, k in 1usize..5) {
        let mut g = rng(seed);
        let cell = |p_missing: f64, scale: f64, g: &mut rand_chacha::ChaCha8Rng| {
            if g.random::<f64>() < p_missing { None } else { Some(scale * (normal(g)).exp()) }
        };
        let mut emissions: Vec<Vec<Option<f64>>> = (0..t).map(|_| (0..n).map(|_| cell(0.3, 1e5, &mut g)).collect()).collect();
        let revenue: Vec<Vec<Option<f64>>> = (0..t).map(|_| (0..n).map(|_| cell(0.2, 1e3, &mut g)).collect()).collect();
        emissions[0][0] = Some(1e5);
        let mut revenue = revenue;
        revenue[0][0] = Some(1e3);
        let sectors: Vec<String> = (0..n).map(|i| format!("S{}", i % 3)).collect();
        let obs = EmissionsObservations { emissions: emissions.clone(), revenue: revenue.clone() };
        let draws = impute_emissions(&obs, &sectors, k, seed).unwrap();
        for panel in &draws.panels {
            for p in 0..t {
                for i in 0..n {
                    prop_assert!(panel[(p, i)] > 0.0 && panel[(p, i)].is_finite());
                    if let (Some(c), Some(s)) = (emissions[p][i], revenue[p][i]) {
                        prop_assert_eq!(panel[(p, i)].to_bits(), (c / s).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn solver_gradient_matches_finite_differences(seed in 0u64..10_000, n in 2usize..6) {
        let mut g = rng(seed);
        let mu = DVector::from_fn(n, |_, _| g.random_range(-0.1..0.3));
        let sigma = random_covariance(&mut g, n, 0.05);
        let cfg = SolverConfig { gamma: g.random_range(0.0..1.0), theta: g.random_range(0.0..2.0), ..SolverConfig::default() };
        let x = simplex_point(&(0..n).map(|_| g.random_range(0.05..1.0)).collect::<Vec<_>>());
        let grad = gradient(&x, &mu, &sigma, None, &cfg).unwrap();
        let f = |v: &DVector<f64>| {
            // The objective is defined off the simplex through the same formula.
            v.dot(&mu) - cfg.gamma * v.norm() - cfg.theta * v.dot(&(&sigma * v))
        };
        let h = 1e-6;
        for i in 0..n {
            let mut up = x.as_vector().clone();
            let mut down = up.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            prop_assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1e-2), "coord {}: fd {} vs {}", i, fd, grad[i]);
        }
        prop_assert!(close(objective(&x, &mu, &sigma, None, &cfg).unwrap(), f(x.as_vector()), 1e-15));
    }

    #[test]
    fn solver_iterates_feasible_and_improving(seed in 0u64..10_000, n in 2usize..8) {
        let mut g = rng(seed);
        let mu = DVector::from_fn(n, |_, _| g.random_range(0.0..0.2));
        let sigma = random_covariance(&mut g, n, 0.05);
        let mut last = f64::NEG_INFINITY;
        for k in 1..40 {
            let cfg = SolverConfig { gamma: 0.2, theta: 1.0, max_iters: k, tol: 1e-300, ..SolverConfig::default() };
            let (x, d) = solve_robust_mv(&mu, &sigma, None, &cfg, &WeightVector::equal(n)).unwrap();
            let v = x.as_vector();
            prop_assert!(v.min() >= -1e-12 && (v.sum() - 1.0).abs() <= 1e-10);
            prop_assert!(d.objective_value >= last - 1e-15);
            last = d.objective_value;
        }
    }

    #[test]
    fn optimal_value_nonincreasing_in_gamma_and_m(seed in 0u64..10_000, n in 2usize..6) {
        let mut g = rng(seed);
        let window = DMatrix::from_fn(100, n, |_, _| 5e-4 + 0.01 * normal(&mut g));
        let lam = IntensityVector::new(DVector::from_fn(n, |_, _| g.random_range(1.0..100.0)), Scope::One).unwrap();
        let sigma = random_covariance(&mut g, n, 1e-4);
        let base = SolverConfig { theta: 0.5, gamma: 1e-3, tol: 1e-12, ..SolverConfig::default() };
        let value = |gamma: f64, m: u32| {
            let mu = emissions_adjusted_mean(&window, &lam, PenaltyParams::new(m, Scope::One).unwrap()).unwrap();
            optimal_value(&mu, &sigma, None, &SolverConfig { gamma, m, ..base.clone() }).unwrap()
        };
        let by_gamma: Vec<f64> = (0..10).map(|i| value(1e-4 * i as f64, 10)).collect();
        prop_assert!(by_gamma.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        // Positive means make the haircut monotone in m; shift so every asset has a positive mean.
        let window = window.map(|v| v.abs() + 1e-4);
        let value = |m: u32| {
            let mu = emissions_adjusted_mean(&window, &lam, PenaltyParams::new(m, Scope::One).unwrap()).unwrap();
            optimal_value(&mu, &sigma, None, &SolverConfig { m, ..base.clone() }).unwrap()
        };
        let by_m: Vec<f64> = (1..=10).map(value).collect();
        prop_assert!(by_m.windows(2).all(|w| w[1] <= w[0] + 1e-14));
    }

    #[test]
    fn simplex_projection_matches_bisection(v in proptest::collection::vec(-5.0..5.0f64, 1..7)) {
        let v = DVector::from_vec(v);
        let got = project_simplex(&v);
        prop_assert!((got.as_vector() - simplex_projection_bisection(&v)).amax() <= 1e-10);
        prop_assert!(got.as_vector().min() >= 0.0 && (got.as_vector().sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cvar_monotone_translation_homogeneous(losses in proptest::collection::vec(-1.0..1.0f64, 5..80), a1 in 0.01..0.99f64, a2 in 0.01..0.99f64, c in -3.0..3.0f64, s in 0.01..10.0f64) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(cvar_empirical(&losses, lo).unwrap() <= cvar_empirical(&losses, hi).unwrap() + 1e-12);
        let base = cvar_empirical(&losses, a1).unwrap();
        let shifted: Vec<f64> = losses.iter().map(|l| l + c).collect();
        let scaled: Vec<f64> = losses.iter().map(|l| l * s).collect();
        prop_assert!(close(cvar_empirical(&shifted, a1).unwrap(), base + c, 1e-12));
        prop_assert!(close(cvar_empirical(&scaled, a1).unwrap(), s * base, 1e-12 * s.max(1.0)));
    }

    #[test]
    fn dro_value_nonincreasing_in_radius(support in proptest::collection::vec(-1.0..1.0f64, 3..25), r1 in 0.0..2.0f64, r2 in 0.0..2.0f64, chi in any::<bool>()) {
        let family = if chi { DivergenceFamily::Chi2 } else { DivergenceFamily::Kl };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let s = DVector::from_vec(support);
        let small = dro_dual_value(&DivergenceBall::new(family, lo, s.clone()).unwrap()).unwrap();
        let large = dro_dual_value(&DivergenceBall::new(family, hi, s).unwrap()).unwrap();
        prop_assert!(large <= small + 1e-9);
    }

    #[test]
    fn vertex_frontier_is_upper_envelope(seed in 0u64..10_000, n in 1usize..12) {
        let mut g = rng(seed);
        let r = DVector::from_fn(n, |_, _| g.random_range(0.0..0.2));
        let lam = IntensityVector::new(DVector::from_fn(n, |_, _| g.random_range(1.0..300.0)), Scope::One).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| 0.002 * i as f64 / 49.0).collect();
        let points = pareto_sweep(&r, &lam, &grid).unwrap();
        for p in &points {
            let envelope = (0..n).map(|i| r[i] - p.mu_weight * lam.values()[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(p.value, envelope);
        }
        let beta = g.random_range(0.1..10.0);
        let scaled = IntensityVector::new(lam.values() * beta, Scope::One).unwrap();
        let rescaled: Vec<f64> = grid.iter().map(|m| m / beta).collect();
        let other = pareto_sweep(&r, &scaled, &rescaled).unwrap();
        let argmax = |pts: &[FrontierPoint]| pts.iter().map(|p| p.weights.as_vector().argmax().0).collect::<Vec<_>>();
        // Rounding in μ/β·βλ can only flip exact ties, which random data does not produce.
        prop_assert_eq!(argmax(&points), argmax(&other));
    }

    #[test]
    fn vertex_sweep_matches_grid_oracle(seed in 0u64..10_000, n in 1usize..5, mu in 0.0..0.002f64) {
        let mut g = rng(seed);
        let r = DVector::from_fn(n, |_, _| g.random_range(0.0..0.2));
        let lam = IntensityVector::new(DVector::from_fn(n, |_, _| g.random_range(1.0..300.0)), Scope::One).unwrap();
        let point = &pareto_sweep(&r, &lam, &[mu]).unwrap()[0];
        let shifted = &r - lam.values() * mu;
        let cfg = SolverConfig { gamma: 0.0, theta: 0.0, ..SolverConfig::default() };
        let (_, oracle) = brute_force_oracle(&shifted, &DMatrix::zeros(n, n), None, &cfg, 0.05).unwrap();
        prop_assert_eq!(point.value, oracle);
    }

    #[test]
    fn newey_west_invariances(seed in 0u64..10_000, t in 30usize..300, bw in 0usize..10, c in -1.0..1.0f64, s in 0.1..10.0f64) {
        let mut g = rng(seed);
        let d: Vec<f64> = (0..t).map(|_| 1e-3 + 0.01 * normal(&mut g)).collect();
        let base = newey_west(&d, bw).unwrap();
        let shifted: Vec<f64> = d.iter().map(|x| x + c).collect();
        prop_assert!(close(newey_west(&shifted, bw).unwrap().long_run_variance, base.long_run_variance, 1e-9 * base.long_run_variance.max(1e-12)));
        let scaled: Vec<f64> = d.iter().map(|x| x * s).collect();
        let ts = newey_west(&scaled, bw).unwrap().t_stat.unwrap();
        prop_assert!(close(ts, base.t_stat.unwrap(), 1e-9 * ts.abs().max(1.0)));
        let iid = newey_west(&d, 0).unwrap().long_run_variance;
        let m = d.iter().sum::<f64>() / t as f64;
        prop_assert_eq!(iid, d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / t as f64);
    }
}

#[test]
fn shrinkage_intensity_vanishes_with_sample_size() {
    let n = 5;
    let cov = {
        let mut g = rng(77);
        random_covariance(&mut g, n, 1e-4)
    };
    let chol = cov.cholesky().unwrap().l();
    let median_delta = |t: usize| {
        let mut deltas: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut g = rng(seed);
                let z = DMatrix::from_fn(t, n, |_, _| normal(&mut g));
                let window = z * chol.transpose();
                ledoit_wolf(&window, ShrinkageTarget::ConstantCorrelation)
                    .unwrap()
                    .delta
            })
            .collect();
        deltas.sort_by(f64::total_cmp);
        0.5 * (deltas[9] + deltas[10])
    };
    let d: Vec<f64> = [50, 500, 5000].into_iter().map(median_delta).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn warm_start_cuts_iterations_on_drifting_problems() {
    let ratios: Vec<f64> = (0..20u64)
        .map(|seed| {
            let mut g = rng(seed);
            let n = 20;
            let mut mu = DVector::from_fn(n, |_, _| g.random_range(0.02..0.12));
            let sigma = random_covariance(&mut g, n, 0.01);
            let cfg = SolverConfig {
                gamma: 0.05,
                theta: 2.0,
                ..SolverConfig::default()
            };
            let (mut prev, _) =
                solve_robust_mv(&mu, &sigma, None, &cfg, &WeightVector::equal(n)).unwrap();
            let (mut warm, mut cold) = (0usize, 0usize);
            for _ in 0..10 {
                mu += DVector::from_fn(n, |_, _| 1e-4 * normal(&mut g));
                let (x, dw) = solve_robust_mv(&mu, &sigma, None, &cfg, &prev).unwrap();
                let (_, dc) =
                    solve_robust_mv(&mu, &sigma, None, &cfg, &WeightVector::equal(n)).unwrap();
                warm += dw.iterations;
                cold += dc.iterations;
                prev = x;
            }
            warm as f64 / cold as f64
        })
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[9] + sorted[10]);
    // First-order convergence is linear, so the saving is bounded by log(drift) / log(tol).
    assert!(median <= 0.8, "median warm/cold iteration ratio {median}");
}

#[test]
fn bootstrap_is_bit_reproducible() {
    let mut g = rng(3);
    let a: Vec<f64> = (0..500).map(|_| 5e-4 + 0.01 * normal(&mut g)).collect();
    let b: Vec<f64> = (0..500).map(|_| 3e-4 + 0.01 * normal(&mut g)).collect();
    let x = block_bootstrap_sharpe(&a, &b, 20, 300, 17).unwrap();
    let y = block_bootstrap_sharpe(&a, &b, 20, 300, 17).unwrap();
    assert_eq!(x, y);
    assert_ne!(
        x.ci_low,
        block_bootstrap_sharpe(&a, &b, 20, 300, 18).unwrap().ci_low
    );
}

#[test]
fn project_simplex_idempotent_on_simplex() {
    let x = DVector::from_vec(vec![0.2, 0.3, 0.5]);
    assert!((project_simplex(&x).as_vector() - &x).amax() < 1e-15);
}
