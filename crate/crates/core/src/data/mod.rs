//! Input tables, calendar alignment, synthetic data, configuration and report files.
//!
//! CSV schemas (headers are exact):
//!
//! * `prices.csv`: `date,ticker,adjusted_close`
//! * `emissions.csv`: `ticker,fiscal_year,scope,tco2e,confidence`
//! * `revenues.csv`: `ticker,quarter_end,revenue_usd`
//! * `sectors.csv`: `ticker,sector`
//!
//! Outputs are `report_<strategy>.json`, `weights_<strategy>.csv`
//! (`date,ticker,weight`) and `frontier.csv` (`mu,mean_return,intensity,value`).

mod align;
mod config;
mod records;
mod report;
mod synth;

pub use align::{
    align_forward_carry, price_panel, rebalance_calendar, ttm_revenue_mm, AlignedDataset,
    DataConfig, UNKNOWN_SECTOR,
};
pub use config::{GridConfig, InferenceConfig, RunConfig};
pub use records::{
    export, ingest, EmissionRecord, PriceRecord, RawRecords, RevenueRecord, SectorRecord,
    EMISSIONS_FILE, PRICES_FILE, REVENUES_FILE, SECTORS_FILE,
};
pub use report::{
    frontier_csv, read_report_json, weights_csv, write_frontier_csv, write_json, write_text,
    write_weights_csv, FRONTIER_HEADER, WEIGHTS_HEADER,
};
pub use synth::{synth_generate, SynthOutput, SynthSpec};

use crate::error::Result;

/// Ingest-and-align in one step using the month-end calendar of the price file.
pub fn load_dataset(dir: &std::path::Path, cfg: &DataConfig, seed: u64) -> Result<AlignedDataset> {
    let raw = ingest(dir)?;
    let (prices, _) = price_panel(&raw)?;
    align_forward_carry(&raw, cfg, &rebalance_calendar(&prices), seed)
}
