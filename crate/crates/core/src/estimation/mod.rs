//! Covariance shrinkage, rolling means and multiple imputation of emissions.

mod imputation;
mod shrinkage;

pub use imputation::{
    average_imputations, impute_emissions, EmissionsObservations, ImputationDraws,
    LogNormalPosterior, SectorPosterior, DEFAULT_DRAWS,
};
pub use shrinkage::{ledoit_wolf, ShrinkageResult, ShrinkageTarget};

use nalgebra::{DMatrix, DVector};

use crate::error::{EapoError, Result};

/// Per-column arithmetic mean.
pub fn rolling_mean(window: &DMatrix<f64>) -> Result<DVector<f64>> {
    if window.nrows() == 0 {
        return Err(EapoError::InsufficientData("empty window".into()));
    }
    Ok(crate::linalg::column_means(window))
}
