//! Command-line front end. Exit codes: 0 success, 1 usage or configuration,
//! 2 data error, 3 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::backtest::{run_backtest, BacktestConfig, BacktestReport, Strategy};
use crate::data::{
    export, ingest, load_dataset, price_panel, read_report_json, synth_generate,
    write_frontier_csv, write_json, write_text, write_weights_csv, AlignedDataset, RunConfig,
};
use crate::error::{EapoError, Result};
use crate::estimation::{ledoit_wolf, rolling_mean, ShrinkageTarget};
use crate::frontier::{
    bellman_flat_enumeration, bellman_tiny, frontier_diagnostics_with_tol, pareto_sweep,
    pareto_sweep_regularized, random_tiny_spec,
};
use crate::inference::{block_bootstrap_sharpe, pairwise_return_tests};
use crate::penalty::{emissions_adjusted_mean, PenaltyParams};
use crate::types::{IntensityVector, Scope};

#[derive(Debug, Parser)]
#[command(
    name = "eapo",
    version,
    about = "Emissions-aware robust portfolio optimization"
)]
struct Cli {
    /// TOML or JSON file of flat `key = value` settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Emissions scope used for intensities.
    #[arg(long, global = true)]
    scope: Option<Scope>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset (four CSV files) to the output directory.
    Synth,
    /// Validate a dataset directory and print a summary.
    Ingest { data: PathBuf },
    /// Backtest one strategy or `all`; writes report and weight files.
    Backtest {
        data: PathBuf,
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Exclude assets without disclosed intensity instead of imputing.
        #[arg(long)]
        strict: bool,
    },
    /// Sweep the carbon price at the last rebalance date; writes frontier.csv.
    Frontier {
        data: PathBuf,
        /// Vertex solutions of the linear trade-off instead of the full robust objective.
        #[arg(long)]
        vertex: bool,
    },
    /// Backtest EAPO over the configured Γ, θ and m grids; writes sweep.csv.
    Sweep { data: PathBuf },
    /// HAC tests and a bootstrap Sharpe interval for two report files.
    Infer {
        report_a: PathBuf,
        report_b: PathBuf,
    },
    /// Tiny robust dynamic program checked against flat enumeration.
    DpDemo,
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(scope) = cli.scope {
        cfg.data.scope = scope;
    }
    match cli.command {
        Command::Synth => synth(&cfg, &cli.out),
        Command::Ingest { data } => ingest_summary(&data),
        Command::Backtest {
            data,
            strategy,
            strict,
        } => {
            cfg.data.strict |= strict;
            backtest(&cfg, &data, &strategy, &cli.out)
        }
        Command::Frontier { data, vertex } => frontier(&cfg, &data, vertex, &cli.out),
        Command::Sweep { data } => sweep(&cfg, &data, &cli.out),
        Command::Infer { report_a, report_b } => infer(&cfg, &report_a, &report_b, &cli.out),
        Command::DpDemo => dp_demo(&cfg, &cli.out),
    }
}

fn synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = synth_generate(&cfg.synth)?;
    export(&data.records, out)?;
    say(&format!(
        "wrote {} assets x {} days to {}",
        cfg.synth.n_assets,
        cfg.synth.n_days,
        out.display()
    ));
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    price_rows: usize,
    emission_rows: usize,
    revenue_rows: usize,
    sector_rows: usize,
    tickers: usize,
    dropped_tickers: Vec<String>,
    first_date: String,
    last_date: String,
}

fn ingest_summary(dir: &Path) -> Result<()> {
    let raw = ingest(dir)?;
    let (prices, dropped) = price_panel(&raw)?;
    let summary = IngestSummary {
        price_rows: raw.prices.len(),
        emission_rows: raw.emissions.len(),
        revenue_rows: raw.revenues.len(),
        sector_rows: raw.sectors.len(),
        tickers: prices.n_assets(),
        dropped_tickers: dropped,
        first_date: prices.dates[0].to_string(),
        last_date: prices.dates[prices.n_dates() - 1].to_string(),
    };
    say(&serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(())
}

/// Prints a line to stdout, ignoring a closed pipe.
fn say(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    if s.eq_ignore_ascii_case("all") {
        Ok(Strategy::ALL.to_vec())
    } else {
        s.split(',').map(str::parse).collect()
    }
}

fn load(cfg: &RunConfig, dir: &Path) -> Result<AlignedDataset> {
    load_dataset(dir, &cfg.data, cfg.solver.seed)
}

fn backtest(cfg: &RunConfig, dir: &Path, strategy: &str, out: &Path) -> Result<()> {
    let strategies = parse_strategies(strategy)?;
    let data = load(cfg, dir)?;
    let reports: Vec<BacktestReport> = strategies
        .par_iter()
        .map(|&s| {
            let bc = BacktestConfig {
                strategy: s,
                ..cfg.backtest.clone()
            };
            run_backtest(&data.prices, &data.intensities, &bc)
        })
        .collect::<Result<_>>()?;
    for rep in &reports {
        write_json(rep, &out.join(format!("report_{}.json", rep.strategy)))?;
        write_weights_csv(rep, &out.join(format!("weights_{}.csv", rep.strategy)))?;
        say(&format!(
            "{:<10} ann_return {:>8.4} vol {:>7.4} sharpe {:>7.3} mdd {:>8.4} avg_intensity {:>10.3}",
            rep.strategy,
            rep.metrics.annualized_return,
            rep.metrics.annualized_volatility,
            rep.metrics.sharpe.unwrap_or(f64::NAN),
            rep.metrics.max_drawdown,
            rep.average_intensity
        ));
    }
    Ok(())
}

/// Estimation window and intensities at the last rebalance date with full history, over active assets.
fn last_cross_section(
    cfg: &RunConfig,
    data: &AlignedDataset,
) -> Result<(DMatrix<f64>, Vec<IntensityVector>, DVector<f64>)> {
    let look = cfg.backtest.lookback;
    let panel = &data.intensities;
    let returns = data.prices.returns()?.values;
    for row in (0..panel.n_dates()).rev() {
        let d = data
            .prices
            .dates
            .binary_search(&panel.dates[row])
            .map_err(|_| EapoError::Alignment("rebalance date not in calendar".into()))?;
        if d < look + 1 {
            break;
        }
        let active: Vec<usize> = panel
            .active(row)
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(i, _)| i)
            .collect();
        if active.is_empty() {
            continue;
        }
        let window = DMatrix::from_fn(look, active.len(), |t, k| {
            returns[(d - 1 - look + t, active[k])]
        });
        let draws = panel
            .draws
            .iter()
            .map(|m| {
                IntensityVector::new(
                    DVector::from_iterator(active.len(), active.iter().map(|&i| m[(row, i)])),
                    panel.scope,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let point = panel.point();
        let lam = DVector::from_iterator(active.len(), active.iter().map(|&i| point[(row, i)]));
        return Ok((window, draws, lam));
    }
    Err(EapoError::InsufficientData(
        "no rebalance date has enough history for a frontier".into(),
    ))
}

fn frontier(cfg: &RunConfig, dir: &Path, vertex: bool, out: &Path) -> Result<()> {
    let data = load(cfg, dir)?;
    let (window, draws, lam) = last_cross_section(cfg, &data)?;
    let lambda = IntensityVector::new(lam.clone(), cfg.data.scope)?;
    let r = rolling_mean(&window)?;
    let params = PenaltyParams::new(cfg.solver.m, cfg.data.scope)?;
    let mut mu_e = DVector::zeros(r.len());
    for d in &draws {
        mu_e += emissions_adjusted_mean(&window, d, params)?;
    }
    mu_e /= draws.len() as f64;
    let base = if vertex { &r } else { &mu_e };
    let mu_max = cfg.grids.mu_max.unwrap_or_else(|| {
        let spread_r = base.max() - base.min();
        let spread_l = lam.max() - lam.min();
        if spread_r > 0.0 && spread_l > 0.0 {
            2.0 * spread_r / spread_l
        } else {
            1.0
        }
    });
    let k = cfg.grids.mu_points.max(3);
    let grid: Vec<f64> = (0..k).map(|i| mu_max * i as f64 / (k - 1) as f64).collect();
    let points = if vertex {
        pareto_sweep(&r, &lambda, &grid)?
    } else {
        let sigma = ledoit_wolf(&window, ShrinkageTarget::ConstantCorrelation)?.sigma_hat;
        pareto_sweep_regularized(&mu_e, &sigma, None, &lambda, &cfg.solver, &grid)?
    };
    write_frontier_csv(&points, &out.join("frontier.csv"))?;
    let report = frontier_diagnostics_with_tol(&points, if vertex { 1e-12 } else { 1e-7 })?;
    write_json(&report, &out.join("frontier_diagnostics.json"))?;
    say(&format!(
        "wrote {} frontier points; diagnostics clean: {}",
        points.len(),
        report.is_clean()
    ));
    Ok(())
}

fn sweep(cfg: &RunConfig, dir: &Path, out: &Path) -> Result<()> {
    let data = load(cfg, dir)?;
    let mut combos = Vec::new();
    for &g in &cfg.grids.gamma_grid {
        for &t in &cfg.grids.theta_grid {
            for &m in &cfg.grids.m_grid {
                combos.push((g, t, m));
            }
        }
    }
    let rows: Vec<String> = combos
        .par_iter()
        .map(|&(gamma, theta, m)| {
            let mut bc = BacktestConfig {
                strategy: Strategy::Eapo,
                ..cfg.backtest.clone()
            };
            bc.solver.gamma = gamma;
            bc.solver.theta = theta;
            bc.solver.m = m;
            let rep = run_backtest(&data.prices, &data.intensities, &bc)?;
            let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            Ok(format!(
                "{gamma},{theta},{m},{},{},{},{},{}\n",
                rep.metrics.annualized_return,
                rep.metrics.annualized_volatility,
                opt(rep.metrics.sharpe),
                rep.metrics.max_drawdown,
                rep.average_intensity
            ))
        })
        .collect::<Result<_>>()?;
    let mut body = String::from("gamma,theta,m,annualized_return,annualized_volatility,sharpe,max_drawdown,average_intensity\n");
    for r in &rows {
        body.push_str(r);
    }
    write_text(&body, &out.join("sweep.csv"))?;
    say(&format!("wrote {} sweep rows", rows.len()));
    Ok(())
}

#[derive(Serialize)]
struct InferenceOutput {
    hac: Vec<crate::inference::PairwiseTest>,
    bootstrap: crate::inference::BootstrapResult,
}

fn infer(cfg: &RunConfig, a: &Path, b: &Path, out: &Path) -> Result<()> {
    let reports = vec![read_report_json(a)?, read_report_json(b)?];
    let hac = pairwise_return_tests(&reports, cfg.inference.bandwidth)?;
    let bootstrap = block_bootstrap_sharpe(
        &reports[0].net_returns,
        &reports[1].net_returns,
        cfg.inference.block_length,
        cfg.inference.replications,
        cfg.solver.seed,
    )?;
    for p in &hac {
        let t = p
            .result
            .t_stat
            .map_or_else(|| "undefined".to_string(), |t| format!("{t:.4}"));
        say(&format!(
            "{} vs {}: mean diff {:.3e}, t {}",
            p.first, p.second, p.result.mean_diff, t
        ));
    }
    say(&format!(
        "Sharpe {} - {}: {:.4} [{:.4}, {:.4}]",
        reports[0].strategy,
        reports[1].strategy,
        bootstrap.diff,
        bootstrap.ci_low,
        bootstrap.ci_high
    ));
    write_json(
        &InferenceOutput { hac, bootstrap },
        &out.join("inference.json"),
    )
}

#[derive(Serialize)]
struct DpOutput {
    seed: u64,
    periods: usize,
    assets: usize,
    beta: f64,
    recursion_value: f64,
    flat_enumeration_value: f64,
    identical: bool,
}

fn dp_demo(cfg: &RunConfig, out: &Path) -> Result<()> {
    let seed = cfg.solver.seed;
    let spec = random_tiny_spec(seed, 3, 2, 3, 0.1);
    let v = bellman_tiny(&spec)?;
    let flat = bellman_flat_enumeration(&spec)?;
    say(&format!(
        "recursion V0 = {v:.12}\nflat max-min = {flat:.12}\nbit-identical: {}",
        v.to_bits() == flat.to_bits()
    ));
    write_json(
        &DpOutput {
            seed,
            periods: spec.gammas.len(),
            assets: spec.n_assets(),
            beta: spec.beta,
            recursion_value: v,
            flat_enumeration_value: flat,
            identical: v.to_bits() == flat.to_bits(),
        },
        &out.join("dp.json"),
    )
}
