//! All benchmark strategies on one synthetic market, with tracking against equal weight.
//!
//! Run with `cargo run --release --example benchmark_strategies`.

use eapo::backtest::{run_backtest, tracking, BacktestConfig, Strategy};
use eapo::data::{
    align_forward_carry, price_panel, rebalance_calendar, synth_generate, DataConfig, SynthSpec,
};

fn main() -> eapo::Result<()> {
    let spec = SynthSpec {
        n_assets: 40,
        n_days: 1500,
        ..SynthSpec::default()
    };
    let out = synth_generate(&spec)?;
    let (prices, _) = price_panel(&out.records)?;
    let data = align_forward_carry(
        &out.records,
        &DataConfig::default(),
        &rebalance_calendar(&prices),
        spec.seed,
    )?;

    let strategies = [
        Strategy::Ew,
        Strategy::GmvInvvar,
        Strategy::GmvFull,
        Strategy::Emw,
        Strategy::Eapo,
    ];
    let mut reports = Vec::new();
    for strategy in strategies {
        let cfg = BacktestConfig {
            strategy,
            ..BacktestConfig::default()
        };
        reports.push(run_backtest(&data.prices, &data.intensities, &cfg)?);
    }
    println!(
        "{:>10} {:>8} {:>7} {:>7} {:>9} {:>8} {:>6}",
        "strategy", "return", "vol", "MDD", "intensity", "turnover", "beta"
    );
    for rep in &reports {
        let t = tracking(&rep.net_returns, &reports[0].net_returns, 252.0)?;
        let turnover =
            rep.turnover().iter().skip(1).sum::<f64>() / (rep.rebalances.len() - 1).max(1) as f64;
        println!(
            "{:>10} {:>7.2}% {:>6.2}% {:>6.1}% {:>9.1} {:>8.3} {:>6.2}",
            rep.strategy,
            100.0 * rep.metrics.annualized_return,
            100.0 * rep.metrics.annualized_volatility,
            100.0 * rep.metrics.max_drawdown,
            rep.average_intensity,
            turnover,
            t.beta.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
