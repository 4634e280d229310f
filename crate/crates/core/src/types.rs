//! Core value types shared across modules.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, EapoError, Result};

/// Tolerance used when validating that weights lie on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Greenhouse-gas accounting scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scope {
    One,
    Two,
    Three,
}

impl Scope {
    pub fn number(self) -> u8 {
        match self {
            Scope::One => 1,
            Scope::Two => 2,
            Scope::Three => 3,
        }
    }
}

impl TryFrom<u8> for Scope {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Scope::One),
            2 => Ok(Scope::Two),
            3 => Ok(Scope::Three),
            other => Err(format!("scope must be 1, 2 or 3, got {other}")),
        }
    }
}

impl From<Scope> for u8 {
    fn from(s: Scope) -> u8 {
        s.number()
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches("scope").trim();
        trimmed
            .parse::<u8>()
            .map_err(|_| format!("invalid scope `{s}`"))
            .and_then(Scope::try_from)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Long-only, fully invested portfolio weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    /// Validates nonnegativity and unit sum up to [`SIMPLEX_TOL`].
    pub fn new(values: DVector<f64>) -> Result<Self> {
        ensure_finite(values.iter().copied(), "weights")?;
        if values.is_empty() {
            return Err(EapoError::InvalidInput("empty weight vector".into()));
        }
        if values.iter().any(|&w| w < -SIMPLEX_TOL) {
            return Err(EapoError::InvalidInput(
                "weights must be nonnegative".into(),
            ));
        }
        let sum = values.sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(EapoError::InvalidInput(format!(
                "weights must sum to one, got {sum}"
            )));
        }
        Ok(Self(values))
    }

    pub fn equal(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// Cross-section of emissions intensities (tCO2e per $mm revenue).
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVector {
    values: DVector<f64>,
    scope: Scope,
    lambda_max: f64,
}

impl IntensityVector {
    pub fn new(values: DVector<f64>, scope: Scope) -> Result<Self> {
        validate_intensities(&values)?;
        let lambda_max = values.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            values,
            scope,
            lambda_max,
        })
    }

    /// Uses an explicit normalizer, e.g. the maximum over a wider universe.
    pub fn with_lambda_max(values: DVector<f64>, scope: Scope, lambda_max: f64) -> Result<Self> {
        validate_intensities(&values)?;
        let observed = values.iter().copied().fold(0.0, f64::max);
        if !lambda_max.is_finite() || lambda_max < observed {
            return Err(EapoError::InvalidInput(format!(
                "lambda_max {lambda_max} is below the observed maximum {observed}"
            )));
        }
        Ok(Self {
            values,
            scope,
            lambda_max,
        })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn validate_intensities(values: &DVector<f64>) -> Result<()> {
    ensure_finite(values.iter().copied(), "intensities")?;
    if values.iter().any(|&v| v < 0.0) {
        return Err(EapoError::InvalidInput(
            "intensities must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Gross daily returns, rows are dates and columns are assets.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub values: DMatrix<f64>,
}

impl ReturnsPanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if dates.len() != values.nrows() {
            return Err(EapoError::Shape {
                expected: values.nrows(),
                got: dates.len(),
            });
        }
        if tickers.len() != values.ncols() {
            return Err(EapoError::Shape {
                expected: values.ncols(),
                got: tickers.len(),
            });
        }
        ensure_finite(values.iter().copied(), "returns")?;
        if values.iter().any(|&r| r <= 0.0) {
            return Err(EapoError::InvalidInput(
                "gross returns must be positive".into(),
            ));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EapoError::InvalidInput(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            dates,
            tickers,
            values,
        })
    }

    /// Labels rows with consecutive business days from 2000-01-03 and columns `A0, A1, ...`.
    pub fn unlabeled(values: DMatrix<f64>) -> Result<Self> {
        let dates = business_days(
            NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
            values.nrows(),
        );
        let tickers = (0..values.ncols()).map(|i| format!("A{i}")).collect();
        Self::new(dates, tickers, values)
    }

    pub fn n_periods(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }
}

/// Adjusted close prices, rows are dates and columns are assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub values: DMatrix<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if dates.len() != values.nrows() {
            return Err(EapoError::Shape {
                expected: values.nrows(),
                got: dates.len(),
            });
        }
        if tickers.len() != values.ncols() {
            return Err(EapoError::Shape {
                expected: values.ncols(),
                got: tickers.len(),
            });
        }
        ensure_finite(values.iter().copied(), "prices")?;
        if values.iter().any(|&p| p <= 0.0) {
            return Err(EapoError::InvalidInput("prices must be positive".into()));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EapoError::InvalidInput(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            dates,
            tickers,
            values,
        })
    }

    pub fn n_dates(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }

    /// Gross returns; row `j` is the move from date `j` to date `j + 1` and is labelled with date `j + 1`.
    pub fn returns(&self) -> Result<ReturnsPanel> {
        if self.n_dates() < 2 {
            return Err(EapoError::InsufficientData(
                "need at least two price dates".into(),
            ));
        }
        let (t, n) = (self.n_dates() - 1, self.n_assets());
        let values = DMatrix::from_fn(t, n, |j, i| self.values[(j + 1, i)] / self.values[(j, i)]);
        ReturnsPanel::new(self.dates[1..].to_vec(), self.tickers.clone(), values)
    }

    /// Indices of the last trading day of each calendar month.
    pub fn month_end_indices(&self) -> Vec<usize> {
        month_end_indices(&self.dates)
    }
}

/// Last index of each (year, month) run in a sorted calendar.
pub fn month_end_indices(dates: &[NaiveDate]) -> Vec<usize> {
    (0..dates.len())
        .filter(|&i| {
            i + 1 == dates.len()
                || (dates[i + 1].year(), dates[i + 1].month())
                    != (dates[i].year(), dates[i].month())
        })
        .collect()
}

/// How an intensity entry at a rebalance date was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityStatus {
    /// Forward-carried from the latest prior disclosure.
    Observed,
    Imputed,
    /// Removed from the investable set at this date.
    Excluded,
}

/// Intensities at rebalance dates, with one panel per imputation draw.
///
/// Observed entries are identical across draws. Excluded entries hold `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPanel {
    pub scope: Scope,
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub draws: Vec<DMatrix<f64>>,
    pub status: Vec<Vec<IntensityStatus>>,
    /// Forward-carried absolute emissions where disclosed.
    pub emissions: Vec<Vec<Option<f64>>>,
}

impl IntensityPanel {
    pub fn new(
        scope: Scope,
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        draws: Vec<DMatrix<f64>>,
        status: Vec<Vec<IntensityStatus>>,
        emissions: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let (t, n) = (dates.len(), tickers.len());
        if draws.is_empty() {
            return Err(EapoError::InvalidInput(
                "intensity panel needs at least one draw".into(),
            ));
        }
        for d in &draws {
            if d.shape() != (t, n) {
                return Err(EapoError::Shape {
                    expected: t * n,
                    got: d.len(),
                });
            }
            validate_intensities(&DVector::from_column_slice(d.as_slice()))?;
        }
        if status.len() != t || emissions.len() != t {
            return Err(EapoError::Shape {
                expected: t,
                got: status.len().min(emissions.len()),
            });
        }
        if status.iter().any(|r| r.len() != n) || emissions.iter().any(|r| r.len() != n) {
            return Err(EapoError::InvalidInput(
                "status and emissions rows must cover every asset".into(),
            ));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EapoError::InvalidInput(
                "dates must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            scope,
            dates,
            tickers,
            draws,
            status,
            emissions,
        })
    }

    /// Single-draw panel with every entry observed.
    pub fn observed(
        scope: Scope,
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        let (t, n) = values.shape();
        let status = vec![vec![IntensityStatus::Observed; n]; t];
        let emissions = (0..t)
            .map(|r| (0..n).map(|i| Some(values[(r, i)])).collect())
            .collect();
        Self::new(scope, dates, tickers, vec![values], status, emissions)
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Elementwise mean across draws.
    pub fn point(&self) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.n_dates(), self.n_assets());
        for d in &self.draws {
            acc += d;
        }
        acc / self.draws.len() as f64
    }

    pub fn active(&self, t: usize) -> Vec<bool> {
        self.status[t]
            .iter()
            .map(|s| *s != IntensityStatus::Excluded)
            .collect()
    }
}

/// `n` consecutive weekdays starting at `start` (rolled forward off weekends).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(DVector::from_vec(vec![0.5, 0.5])).is_ok());
        assert!(WeightVector::new(DVector::from_vec(vec![0.6, 0.5])).is_err());
        assert!(WeightVector::new(DVector::from_vec(vec![1.1, -0.1])).is_err());
        assert!(WeightVector::new(DVector::from_vec(vec![f64::NAN, 1.0])).is_err());
    }

    #[test]
    fn intensity_lambda_max() {
        let iv = IntensityVector::new(DVector::from_vec(vec![1.0, 5.0, 2.0]), Scope::One).unwrap();
        assert_eq!(iv.lambda_max(), 5.0);
        assert!(IntensityVector::with_lambda_max(iv.values().clone(), Scope::One, 4.0).is_err());
        assert!(IntensityVector::new(DVector::from_vec(vec![-1.0]), Scope::One).is_err());
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("1".parse::<Scope>().unwrap(), Scope::One);
        assert_eq!("scope3".parse::<Scope>().unwrap(), Scope::Three);
        assert!("4".parse::<Scope>().is_err());
    }

    #[test]
    fn business_days_skip_weekends() {
        let d = business_days(NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), 3);
        assert_eq!(d[1], NaiveDate::from_ymd_opt(2021, 1, 4).unwrap());
    }
}
