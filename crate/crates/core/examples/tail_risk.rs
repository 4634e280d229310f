//! Empirical CVaR, a robust CVaR portfolio, and divergence-ball worst-case losses.
//!
//! Run with `cargo run --example tail_risk`.

use eapo::risk::{
    cvar_empirical, dro_dual_value, dro_primal_oracle, solve_robust_cvar, DivergenceBall,
    DivergenceFamily, ScenarioSet,
};
use eapo::solver::SolverConfig;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StudentT};

fn main() -> eapo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = StudentT::new(4.0).expect("valid degrees of freedom");
    let vols = [0.02, 0.012, 0.006];
    let scenarios = DMatrix::from_fn(1000, 3, |_, j| 4e-4 + vols[j] * t.sample(&mut rng));
    let ew: Vec<f64> = scenarios.row_iter().map(|r| -r.sum() / 3.0).collect();
    println!("equal weight CVaR 95%: {:.4}", cvar_empirical(&ew, 0.95)?);

    let mu_e = DVector::from_vec(vec![6e-4, 4e-4, 2e-4]);
    let cfg = SolverConfig {
        gamma: 0.0,
        ..SolverConfig::default()
    };
    let sol = solve_robust_cvar(
        &ScenarioSet::new(scenarios.clone())?,
        0.95,
        1.0,
        &mu_e,
        None,
        &cfg,
    )?;
    println!(
        "robust CVaR weights {:?}, objective {:.5}",
        sol.weights.as_vector().as_slice(),
        sol.objective_value
    );

    let support = DVector::from_iterator(25, ew.iter().take(25).copied());
    for family in [DivergenceFamily::Kl, DivergenceFamily::Chi2] {
        for rho in [0.0, 0.05, 0.2] {
            let ball = DivergenceBall::new(family, rho, support.clone())?;
            println!(
                "{family:?} ρ = {rho:<4}: dual {:.5}  primal {:.5}",
                dro_dual_value(&ball)?,
                dro_primal_oracle(&ball)?
            );
        }
    }
    Ok(())
}
