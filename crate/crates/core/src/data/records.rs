use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{EapoError, Result};
use crate::types::Scope;

pub const PRICES_FILE: &str = "prices.csv";
pub const EMISSIONS_FILE: &str = "emissions.csv";
pub const REVENUES_FILE: &str = "revenues.csv";
pub const SECTORS_FILE: &str = "sectors.csv";

const PRICES_HEADER: [&str; 3] = ["date", "ticker", "adjusted_close"];
const EMISSIONS_HEADER: [&str; 5] = ["ticker", "fiscal_year", "scope", "tco2e", "confidence"];
const REVENUES_HEADER: [&str; 3] = ["ticker", "quarter_end", "revenue_usd"];
const SECTORS_HEADER: [&str; 2] = ["ticker", "sector"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub date: NaiveDate,
    pub ticker: String,
    pub adjusted_close: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub ticker: String,
    pub fiscal_year: i32,
    pub scope: Scope,
    /// Metric tonnes of CO2-equivalent.
    pub tco2e: f64,
    pub confidence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueRecord {
    pub ticker: String,
    pub quarter_end: NaiveDate,
    /// Quarterly revenue in US dollars.
    pub revenue_usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRecord {
    pub ticker: String,
    pub sector: String,
}

/// The four input tables, as parsed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawRecords {
    pub prices: Vec<PriceRecord>,
    pub emissions: Vec<EmissionRecord>,
    pub revenues: Vec<RevenueRecord>,
    pub sectors: Vec<SectorRecord>,
}

fn parse_err(file: &str, line: u64, msg: impl Into<String>) -> EapoError {
    EapoError::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_table<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<(u64, T)>> {
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let file = File::open(path).map_err(|e| EapoError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| parse_err(&name, 1, e.to_string()))?
        .clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(parse_err(
            &name,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(&name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(Some(&found))
            .map_err(|e| parse_err(&name, line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

fn check_ticker(file: &str, line: u64, t: &str) -> Result<()> {
    if t.trim().is_empty() {
        Err(parse_err(file, line, "empty ticker"))
    } else {
        Ok(())
    }
}

fn unique<K: std::hash::Hash + Eq + std::fmt::Debug>(
    seen: &mut HashSet<K>,
    key: K,
    file: &str,
    line: u64,
) -> Result<()> {
    if seen.contains(&key) {
        return Err(parse_err(file, line, format!("duplicate key {key:?}")));
    }
    seen.insert(key);
    Ok(())
}

/// Reads and validates `prices.csv`, `emissions.csv`, `revenues.csv` and `sectors.csv` from `dir`.
pub fn ingest(dir: &Path) -> Result<RawRecords> {
    let mut raw = RawRecords::default();

    let mut seen = HashSet::new();
    for (line, r) in read_table::<PriceRecord>(&dir.join(PRICES_FILE), &PRICES_HEADER)? {
        check_ticker(PRICES_FILE, line, &r.ticker)?;
        if !(r.adjusted_close.is_finite() && r.adjusted_close > 0.0) {
            return Err(parse_err(
                PRICES_FILE,
                line,
                "adjusted_close must be positive",
            ));
        }
        unique(&mut seen, (r.date, r.ticker.clone()), PRICES_FILE, line)?;
        raw.prices.push(r);
    }

    let mut seen = HashSet::new();
    for (line, mut r) in read_table::<EmissionRecord>(&dir.join(EMISSIONS_FILE), &EMISSIONS_HEADER)?
    {
        check_ticker(EMISSIONS_FILE, line, &r.ticker)?;
        if !(r.tco2e.is_finite() && r.tco2e >= 0.0) {
            return Err(parse_err(EMISSIONS_FILE, line, "tco2e must be nonnegative"));
        }
        if r.confidence.as_deref().is_some_and(|c| c.trim().is_empty()) {
            r.confidence = None;
        }
        unique(
            &mut seen,
            (r.ticker.clone(), r.fiscal_year, r.scope),
            EMISSIONS_FILE,
            line,
        )?;
        raw.emissions.push(r);
    }

    let mut seen = HashSet::new();
    for (line, r) in read_table::<RevenueRecord>(&dir.join(REVENUES_FILE), &REVENUES_HEADER)? {
        check_ticker(REVENUES_FILE, line, &r.ticker)?;
        if !(r.revenue_usd.is_finite() && r.revenue_usd > 0.0) {
            return Err(parse_err(
                REVENUES_FILE,
                line,
                "revenue_usd must be positive",
            ));
        }
        unique(
            &mut seen,
            (r.ticker.clone(), r.quarter_end),
            REVENUES_FILE,
            line,
        )?;
        raw.revenues.push(r);
    }

    let mut seen = HashSet::new();
    for (line, r) in read_table::<SectorRecord>(&dir.join(SECTORS_FILE), &SECTORS_HEADER)? {
        check_ticker(SECTORS_FILE, line, &r.ticker)?;
        if r.sector.trim().is_empty() {
            return Err(parse_err(SECTORS_FILE, line, "empty sector"));
        }
        unique(&mut seen, r.ticker.clone(), SECTORS_FILE, line)?;
        raw.sectors.push(r);
    }
    Ok(raw)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| EapoError::io(path, e))?;
    f.write_all(body.as_bytes())
        .map_err(|e| EapoError::io(path, e))
}

/// Writes the four tables with the exact headers; floats use shortest round-trip formatting.
pub fn export(raw: &RawRecords, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| EapoError::io(dir, e))?;
    let mut s = format!("{}\n", PRICES_HEADER.join(","));
    for r in &raw.prices {
        s.push_str(&format!("{},{},{}\n", r.date, r.ticker, r.adjusted_close));
    }
    write_file(&dir.join(PRICES_FILE), &s)?;

    let mut s = format!("{}\n", EMISSIONS_HEADER.join(","));
    for r in &raw.emissions {
        let conf = r.confidence.as_deref().unwrap_or("");
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.ticker,
            r.fiscal_year,
            r.scope.number(),
            r.tco2e,
            conf
        ));
    }
    write_file(&dir.join(EMISSIONS_FILE), &s)?;

    let mut s = format!("{}\n", REVENUES_HEADER.join(","));
    for r in &raw.revenues {
        s.push_str(&format!(
            "{},{},{}\n",
            r.ticker, r.quarter_end, r.revenue_usd
        ));
    }
    write_file(&dir.join(REVENUES_FILE), &s)?;

    let mut s = format!("{}\n", SECTORS_HEADER.join(","));
    for r in &raw.sectors {
        s.push_str(&format!("{},{}\n", r.ticker, r.sector));
    }
    write_file(&dir.join(SECTORS_FILE), &s)
}
