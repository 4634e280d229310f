//! Emissions penalty on a toy universe: factors, adjusted means and Lipschitz constants.
//!
//! Run with `cargo run --example penalty_operator`.

use eapo::penalty::{
    emissions_adjusted_mean, lipschitz_constants, mean_abs_returns, penalty, penalty_factor,
    PenaltyParams,
};
use eapo::{IntensityVector, Scope};
use nalgebra::{DMatrix, DVector};

fn main() -> eapo::Result<()> {
    let lambda =
        IntensityVector::new(DVector::from_vec(vec![5.0, 40.0, 120.0, 400.0]), Scope::Two)?;
    let lmax = lambda.lambda_max();
    println!("λmax = {lmax}");
    for m in [1, 3, 10] {
        let f: Vec<String> = lambda
            .values()
            .iter()
            .map(|&l| format!("{:.4}", penalty_factor(l, lmax, m)))
            .collect();
        println!("m = {m:>2}: factors [{}]", f.join(", "));
    }
    println!(
        "single return 1% at λ = 40, m = 10: {:.6}",
        penalty(0.01, 40.0, lmax, 10)?
    );

    let window = DMatrix::from_fn(252, 4, |t, j| {
        4e-4 * (j as f64 + 1.0) + 0.01 * ((t * 7 + j * 3) as f64).sin()
    });
    let params = PenaltyParams::new(10, Scope::Two)?;
    let mu_e = emissions_adjusted_mean(&window, &lambda, params)?;
    let l = lipschitz_constants(&mean_abs_returns(&window), lmax, 10)?;
    println!(
        "adjusted means  {:?}",
        mu_e.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
    );
    println!(
        "Lipschitz bound {:?}",
        l.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
    );
    Ok(())
}
