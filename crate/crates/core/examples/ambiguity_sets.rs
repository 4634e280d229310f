//! Worst-case mean gap over intensity balls: sampled gaps versus the dual-norm bound.
//!
//! Run with `cargo run --example ambiguity_sets`.

use eapo::ambiguity::{
    dual_norm_penalty, ellipse_stats, mean_gap, sample_ball, AmbiguityBall, BallNorm,
};
use eapo::penalty::lipschitz_constants;
use eapo::{IntensityVector, Scope, WeightVector};
use nalgebra::{DMatrix, DVector};

fn main() -> eapo::Result<()> {
    let lambda = IntensityVector::new(DVector::from_vec(vec![20.0, 60.0, 150.0]), Scope::One)?;
    let means = DVector::from_vec(vec![6e-4, 5e-4, 8e-4]);
    let x = WeightVector::new(DVector::from_vec(vec![0.5, 0.3, 0.2]))?;
    let l = lipschitz_constants(&means, lambda.lambda_max(), 10)?;
    for p in [BallNorm::L1, BallNorm::L2, BallNorm::LInf] {
        let ball = AmbiguityBall::new(p, 5.0)?;
        let bound = dual_norm_penalty(&x, &l, &ball)?;
        let worst = sample_ball(&ball, 3, 20_000, 7)
            .iter()
            .map(|eps| mean_gap(&x, &lambda, eps, &means, 10))
            .fold(f64::NEG_INFINITY, f64::max);
        println!("{p:?}: sampled worst gap {worst:.3e} <= bound {bound:.3e}");
    }
    let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.5, 1.5, 2.0]);
    let e = ellipse_stats(&cov, 0.95)?;
    println!(
        "95% ellipse: semi-axes {:.3}, {:.3}; area {:.3}",
        e.axis1, e.axis2, e.area
    );
    Ok(())
}
