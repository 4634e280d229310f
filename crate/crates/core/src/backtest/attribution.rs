use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{EapoError, Result};

/// Decomposition of the intensity gap `Λ^B − Λ^A` into sector allocation and within-sector selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub allocation: f64,
    pub selection: f64,
    pub total: f64,
}

pub const UNKNOWN_SECTOR: &str = "UNKNOWN";

struct SectorAggregate {
    weight: f64,
    weighted: f64,
    plain_sum: f64,
    count: usize,
}

impl SectorAggregate {
    /// Weight-averaged intensity, or the plain sector mean when the sector is unheld.
    fn mean_intensity(&self) -> f64 {
        if self.weight > 0.0 {
            self.weighted / self.weight
        } else {
            self.plain_sum / self.count as f64
        }
    }
}

fn aggregate(
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    sectors: &[&str],
) -> BTreeMap<String, SectorAggregate> {
    let mut out: BTreeMap<String, SectorAggregate> = BTreeMap::new();
    for i in 0..x.len() {
        let e = out
            .entry(sectors[i].to_string())
            .or_insert(SectorAggregate {
                weight: 0.0,
                weighted: 0.0,
                plain_sum: 0.0,
                count: 0,
            });
        e.weight += x[i];
        e.weighted += x[i] * lambda[i];
        e.plain_sum += lambda[i];
        e.count += 1;
    }
    out
}

/// Allocation `Σ_s (w^B_s − w^A_s)·λ̄^B_s`; selection is the residual so the identity holds exactly.
///
/// Sectors given as `None` (or missing entries) map to [`UNKNOWN_SECTOR`].
pub fn attribution(
    weights_a: &DVector<f64>,
    weights_b: &DVector<f64>,
    intensities: &DVector<f64>,
    sectors: &[Option<String>],
) -> Result<Attribution> {
    let n = intensities.len();
    if weights_a.len() != n || weights_b.len() != n {
        return Err(EapoError::Shape {
            expected: n,
            got: weights_a.len().min(weights_b.len()),
        });
    }
    let names: Vec<&str> = (0..n)
        .map(|i| {
            sectors
                .get(i)
                .and_then(|s| s.as_deref())
                .unwrap_or(UNKNOWN_SECTOR)
        })
        .collect();
    let agg_a = aggregate(weights_a, intensities, &names);
    let agg_b = aggregate(weights_b, intensities, &names);
    let allocation: f64 = agg_b
        .iter()
        .map(|(s, b)| (b.weight - agg_a[s].weight) * b.mean_intensity())
        .sum();
    let total = weights_b.dot(intensities) - weights_a.dot(intensities);
    Ok(Attribution {
        allocation,
        selection: total - allocation,
        total,
    })
}

/// Per-date attribution averaged over rebalance dates.
pub fn attribution_over_time(
    weights_a: &[DVector<f64>],
    weights_b: &[DVector<f64>],
    intensities: &[DVector<f64>],
    sectors: &[Option<String>],
) -> Result<Attribution> {
    if weights_a.len() != weights_b.len() || weights_a.len() != intensities.len() {
        return Err(EapoError::Alignment(
            "weight and intensity panels cover different dates".into(),
        ));
    }
    if weights_a.is_empty() {
        return Err(EapoError::InsufficientData("no dates to attribute".into()));
    }
    let t = weights_a.len() as f64;
    let mut acc = Attribution {
        allocation: 0.0,
        selection: 0.0,
        total: 0.0,
    };
    for ((a, b), l) in weights_a.iter().zip(weights_b).zip(intensities) {
        let r = attribution(a, b, l, sectors)?;
        acc.allocation += r.allocation;
        acc.total += r.total;
    }
    let allocation = acc.allocation / t;
    let total = acc.total / t;
    Ok(Attribution {
        allocation,
        selection: total - allocation,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn sec(names: &[&str]) -> Vec<Option<String>> {
        names.iter().map(|s| Some(s.to_string())).collect()
    }

    #[test]
    fn identical_weights() {
        let x = v(&[0.2, 0.3, 0.5]);
        let r = attribution(&x, &x, &v(&[1.0, 5.0, 9.0]), &sec(&["a", "b", "a"])).unwrap();
        assert_eq!((r.allocation, r.selection, r.total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_sector_is_selection() {
        let r = attribution(
            &v(&[0.9, 0.1]),
            &v(&[0.5, 0.5]),
            &v(&[1.0, 3.0]),
            &sec(&["x", "x"]),
        )
        .unwrap();
        assert_eq!(r.allocation, 0.0);
        assert!((r.selection - 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_sector_hand_case() {
        // Sector a = {0, 1}, sector b = {2}.
        let a = v(&[0.6, 0.0, 0.4]);
        let b = v(&[0.25, 0.25, 0.5]);
        let lam = v(&[2.0, 6.0, 10.0]);
        let r = attribution(&a, &b, &lam, &sec(&["a", "a", "b"])).unwrap();
        // λ̄^B_a = 4, λ̄^B_b = 10; allocation = (0.5 − 0.6)·4 + (0.5 − 0.4)·10 = 0.6.
        assert!((r.allocation - 0.6).abs() < 1e-15);
        // Λ^B − Λ^A = 7 − 5.2.
        assert!((r.total - 1.8).abs() < 1e-14);
        assert!((r.selection - 1.2).abs() < 1e-14);
    }

    #[test]
    fn unmapped_assets_are_unknown() {
        let r = attribution(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &v(&[1.0, 2.0]), &[None]).unwrap();
        assert_eq!(r.allocation, 0.0);
    }
}
