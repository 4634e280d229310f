//! Robust mean-variance weights as Γ grows, with a turnover cap and a shadow price.
//!
//! Run with `cargo run --example robust_solver`.

use eapo::solver::{shadow_price, solve_robust_mv, SolverConfig};
use eapo::WeightVector;
use nalgebra::{DMatrix, DVector};

fn main() -> eapo::Result<()> {
    let mu = DVector::from_vec(vec![0.08, 0.06, 0.05, 0.03]);
    let sigma = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.040, 0.006, 0.004, 0.002, 0.006, 0.030, 0.005, 0.001, 0.004, 0.005, 0.020, 0.001,
            0.002, 0.001, 0.001, 0.010,
        ],
    );
    let start = WeightVector::equal(4);
    for gamma in [0.01, 0.02, 0.05, 0.2] {
        let cfg = SolverConfig {
            gamma,
            theta: 1.0,
            ..SolverConfig::default()
        };
        let (x, d) = solve_robust_mv(&mu, &sigma, None, &cfg, &start)?;
        let pi = shadow_price(&mu, &sigma, None, &cfg, 1e-3)?;
        println!(
            "Γ = {gamma:<5} x = {:?}  value {:.5}  iters {:>4}  dV/dΓ {:.4}",
            x.as_vector()
                .iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>(),
            d.objective_value,
            d.iterations,
            -pi,
        );
    }
    let capped = SolverConfig {
        gamma: 0.0,
        theta: 1.0,
        turnover_cap: Some(0.2),
        ..SolverConfig::default()
    };
    let (x, d) = solve_robust_mv(&mu, &sigma, None, &capped, &start)?;
    let moved = (x.as_vector() - start.as_vector()).lp_norm(1);
    println!(
        "turnover cap 0.2: moved {moved:.4}, binding {}",
        d.turnover_binding
    );
    Ok(())
}
