//! Covariance shrinkage and multiple imputation of missing emissions.
//!
//! Run with `cargo run --example estimation`.

use eapo::estimation::{
    average_imputations, impute_emissions, ledoit_wolf, EmissionsObservations, ShrinkageTarget,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> eapo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in [30, 120, 1000] {
        let common: Vec<f64> = (0..t)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let window = DMatrix::from_fn(t, 8, |s, j| {
            0.01 * (0.2 * (j + 1) as f64 * common[s] + rng.sample::<f64, _>(StandardNormal))
        });
        let res = ledoit_wolf(&window, ShrinkageTarget::ConstantCorrelation)?;
        println!("T = {t:>4}: shrinkage intensity {:.3}", res.delta);
    }

    let sectors: Vec<String> = (0..6)
        .map(|i| if i < 3 { "energy" } else { "software" }.to_string())
        .collect();
    // Every fourth cell is undisclosed; energy names emit far more per unit of revenue.
    let emissions: Vec<Vec<Option<f64>>> = (0..3)
        .map(|p| {
            (0..6)
                .map(|i| {
                    ((i + p) % 4 != 0)
                        .then_some(if i < 3 { 9.0e5 } else { 2.0e4 } * (1.0 + 0.1 * i as f64))
                })
                .collect()
        })
        .collect();
    let revenue = vec![vec![Some(1.0e4); 6]; 3];
    let obs = EmissionsObservations { emissions, revenue };
    let draws = impute_emissions(&obs, &sectors, 20, 11)?;
    let avg = average_imputations(&draws)?;
    for p in 0..3 {
        let row: Vec<String> = (0..6)
            .map(|i| {
                format!(
                    "{:>7.1}{}",
                    avg[(p, i)],
                    if draws.imputed[p][i] { "*" } else { " " }
                )
            })
            .collect();
        println!("period {p}: {}", row.join(" "));
    }
    println!("(* = imputed, averaged over {} draws)", draws.k);
    Ok(())
}
