use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::align::DataConfig;
use super::synth::SynthSpec;
use crate::backtest::BacktestConfig;
use crate::error::{EapoError, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub block_length: usize,
    pub replications: usize,
    pub bandwidth: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            block_length: 20,
            replications: 2000,
            bandwidth: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Largest carbon price on the frontier grid; `None` picks a scale from the data.
    pub mu_max: Option<f64>,
    pub mu_points: usize,
    pub gamma_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub m_grid: Vec<u32>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            mu_max: None,
            mu_points: 41,
            gamma_grid: vec![0.0, 1.0, 2.0, 3.5, 5.0],
            theta_grid: vec![0.5],
            m_grid: vec![10],
        }
    }
}

/// Every tunable, read from one flat TOML or JSON table whose keys are the field names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub backtest: BacktestConfig,
    pub data: DataConfig,
    pub inference: InferenceConfig,
    pub grids: GridConfig,
    pub synth: SynthSpec,
}

fn keys_of<T: Serialize>(value: &T) -> Vec<String> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn section<T: DeserializeOwned>(
    map: &Map<String, Value>,
    keys: &[String],
    name: &str,
) -> Result<T> {
    let sub: Map<String, Value> = map
        .iter()
        .filter(|(k, _)| keys.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    serde_json::from_value(Value::Object(sub))
        .map_err(|e| EapoError::Config(format!("{name}: {e}")))
}

impl RunConfig {
    /// Builds a config from a flat key/value table. A key shared by several sections (such as `seed`) sets all of them.
    pub fn from_map(map: &Map<String, Value>) -> Result<Self> {
        let d = RunConfig::default();
        let solver_keys = keys_of(&d.solver);
        let backtest_keys = keys_of(&d.backtest);
        let data_keys = keys_of(&d.data);
        let inference_keys = keys_of(&d.inference);
        let grid_keys = keys_of(&d.grids);
        let synth_keys = keys_of(&d.synth);
        for k in map.keys() {
            let known = [
                &solver_keys,
                &backtest_keys,
                &data_keys,
                &inference_keys,
                &grid_keys,
                &synth_keys,
            ]
            .iter()
            .any(|ks| ks.contains(k));
            if !known {
                return Err(EapoError::Config(format!(
                    "unknown configuration key `{k}`"
                )));
            }
        }
        let solver: SolverConfig = section(map, &solver_keys, "solver")?;
        solver.validate()?;
        let mut backtest: BacktestConfig = section(map, &backtest_keys, "backtest")?;
        backtest.solver = solver.clone();
        backtest.validate()?;
        let synth: SynthSpec = section(map, &synth_keys, "synth")?;
        synth.validate()?;
        Ok(Self {
            solver,
            backtest,
            data: section(map, &data_keys, "data")?,
            inference: section(map, &inference_keys, "inference")?,
            grids: section(map, &grid_keys, "grids")?,
            synth,
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: toml::Table = s
            .parse()
            .map_err(|e: toml::de::Error| EapoError::Config(e.to_string()))?;
        let value = serde_json::to_value(table).map_err(|e| EapoError::Config(e.to_string()))?;
        match value {
            Value::Object(m) => Self::from_map(&m),
            _ => Err(EapoError::Config("configuration must be a table".into())),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        match serde_json::from_str::<Value>(s).map_err(|e| EapoError::Config(e.to_string()))? {
            Value::Object(m) => Self::from_map(&m),
            _ => Err(EapoError::Config(
                "configuration must be a JSON object".into(),
            )),
        }
    }

    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EapoError::Config(format!("{}: {e}", path.display())))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    /// Overrides every seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.solver.seed = seed;
        self.backtest.solver.seed = seed;
        self.synth.seed = seed;
    }
}
