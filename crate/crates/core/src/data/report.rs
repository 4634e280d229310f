use std::path::Path;

use serde::Serialize;

use crate::backtest::BacktestReport;
use crate::error::{EapoError, Result};
use crate::frontier::FrontierPoint;

pub const WEIGHTS_HEADER: &str = "date,ticker,weight";
pub const FRONTIER_HEADER: &str = "mu,mean_return,intensity,value";

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| EapoError::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| EapoError::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| EapoError::InvalidInput(e.to_string()))?;
    s.push('\n');
    write(path, &s)
}

pub fn read_report_json(path: &Path) -> Result<BacktestReport> {
    let text = std::fs::read_to_string(path).map_err(|e| EapoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| EapoError::Parse {
        file: path.display().to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

/// One row per (rebalance date, ticker), dates ascending and tickers in panel order.
pub fn weights_csv(report: &BacktestReport) -> String {
    let mut s = format!("{WEIGHTS_HEADER}\n");
    for r in &report.rebalances {
        for (t, w) in report.tickers.iter().zip(&r.weights) {
            s.push_str(&format!("{},{},{}\n", r.date, t, w));
        }
    }
    s
}

pub fn write_weights_csv(report: &BacktestReport, path: &Path) -> Result<()> {
    write(path, &weights_csv(report))
}

pub fn frontier_csv(points: &[FrontierPoint]) -> String {
    let mut s = format!("{FRONTIER_HEADER}\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{}\n",
            p.mu_weight, p.mean_return, p.intensity, p.value
        ));
    }
    s
}

pub fn write_frontier_csv(points: &[FrontierPoint], path: &Path) -> Result<()> {
    write(path, &frontier_csv(points))
}

pub fn write_text(body: &str, path: &Path) -> Result<()> {
    write(path, body)
}
