//! Return versus intensity as the carbon price rises, with frontier diagnostics.
//!
//! Run with `cargo run --example carbon_frontier`.

use eapo::frontier::{
    frontier_diagnostics, frontier_diagnostics_with_tol, pareto_sweep, pareto_sweep_regularized,
};
use eapo::solver::SolverConfig;
use eapo::{IntensityVector, Scope};
use nalgebra::{DMatrix, DVector};

fn main() -> eapo::Result<()> {
    let r = DVector::from_vec(vec![0.10, 0.08, 0.07, 0.04]);
    let lambda = IntensityVector::new(
        DVector::from_vec(vec![300.0, 120.0, 60.0, 10.0]),
        Scope::One,
    )?;
    let grid: Vec<f64> = (0..=800).map(|k| k as f64 * 1.25e-6).collect();

    let vertex = pareto_sweep(&r, &lambda, &grid)?;
    println!(
        "vertex sweep diagnostics: {:?}",
        frontier_diagnostics(&vertex)?
    );
    for p in vertex.iter().step_by(160) {
        println!(
            "  μ = {:.2e}: return {:.3}, intensity {:>6.1}",
            p.mu_weight, p.mean_return, p.intensity
        );
    }

    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![0.04, 0.03, 0.02, 0.01]));
    let cfg = SolverConfig {
        gamma: 0.01,
        theta: 1.0,
        ..SolverConfig::default()
    };
    let smooth = pareto_sweep_regularized(&r, &sigma, None, &lambda, &cfg, &grid)?;
    println!(
        "regularized sweep diagnostics: {:?}",
        frontier_diagnostics_with_tol(&smooth, 1e-6)?
    );
    for p in smooth.iter().step_by(160) {
        println!(
            "  μ = {:.2e}: return {:.4}, intensity {:>6.1}",
            p.mu_weight, p.mean_return, p.intensity
        );
    }
    Ok(())
}
