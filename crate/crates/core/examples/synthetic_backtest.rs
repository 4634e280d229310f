//! Generate a synthetic market, backtest EW and EAPO, and compare footprints.
//!
//! Run with `cargo run --release --example synthetic_backtest`.

use eapo::backtest::{run_backtest, BacktestConfig, Strategy};
use eapo::data::{
    align_forward_carry, price_panel, rebalance_calendar, synth_generate, DataConfig, SynthSpec,
};
use eapo::inference::block_bootstrap_sharpe;

fn main() -> eapo::Result<()> {
    let spec = SynthSpec::default();
    let out = synth_generate(&spec)?;
    let (prices, _) = price_panel(&out.records)?;
    let data = align_forward_carry(
        &out.records,
        &DataConfig::default(),
        &rebalance_calendar(&prices),
        spec.seed,
    )?;

    let mut reports = Vec::new();
    for strategy in [Strategy::Ew, Strategy::Eapo] {
        let cfg = BacktestConfig {
            strategy,
            ..BacktestConfig::default()
        };
        let rep = run_backtest(&data.prices, &data.intensities, &cfg)?;
        println!(
            "{:>5}: ann. return {:>7.2}%  vol {:>6.2}%  Sharpe {:>5.2}  avg intensity {:>8.2}",
            strategy,
            100.0 * rep.metrics.annualized_return,
            100.0 * rep.metrics.annualized_volatility,
            rep.metrics.sharpe.unwrap_or(f64::NAN),
            rep.average_intensity,
        );
        reports.push(rep);
    }
    let reduction = 1.0 - reports[1].average_intensity / reports[0].average_intensity;
    println!("intensity reduction vs EW: {:.1}%", 100.0 * reduction);
    let boot = block_bootstrap_sharpe(
        &reports[1].net_returns,
        &reports[0].net_returns,
        20,
        2000,
        spec.seed,
    )?;
    println!(
        "Sharpe difference {:.3}, 95% CI [{:.3}, {:.3}]",
        boot.diff, boot.ci_low, boot.ci_high
    );
    Ok(())
}
