use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{EapoError, Result};
use crate::types::PricePanel;

/// Trailing window of daily returns used for stock volatility and the momentum start.
pub const STYLE_WINDOW: usize = 252;
/// Most recent days excluded from momentum.
pub const MOMENTUM_SKIP: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleExposure {
    /// Weighted average of annualized single-stock volatility.
    pub volatility: f64,
    /// Weighted average of the 12-1 month return `P[t−21]/P[t−252] − 1`.
    pub momentum: f64,
    /// Rebalance dates that had enough history.
    pub n_dates: usize,
}

/// Exposures of weights `x` held at price index `t`; `None` without 252 days of history.
pub fn style_at(
    prices: &PricePanel,
    t: usize,
    x: &DVector<f64>,
    annualization: f64,
) -> Option<(f64, f64)> {
    if t < STYLE_WINDOW || t >= prices.n_dates() || x.len() != prices.n_assets() {
        return None;
    }
    let p = &prices.values;
    let mut vol = 0.0;
    let mut mom = 0.0;
    for i in 0..prices.n_assets() {
        if x[i] == 0.0 {
            continue;
        }
        let rets: Vec<f64> = (t + 1 - STYLE_WINDOW..=t)
            .map(|d| p[(d, i)] / p[(d - 1, i)] - 1.0)
            .collect();
        let m = rets.iter().sum::<f64>() / rets.len() as f64;
        let var = rets.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (rets.len() - 1) as f64;
        vol += x[i] * (var * annualization).sqrt();
        mom += x[i] * (p[(t - MOMENTUM_SKIP, i)] / p[(t - STYLE_WINDOW, i)] - 1.0);
    }
    Some((vol, mom))
}

/// Time average of [`style_at`] over the given (price index, weights) pairs, skipping short histories.
pub fn style_diagnostics(
    prices: &PricePanel,
    holdings: &[(usize, DVector<f64>)],
    annualization: f64,
) -> Result<StyleExposure> {
    let mut vol = 0.0;
    let mut mom = 0.0;
    let mut n = 0usize;
    for (t, x) in holdings {
        match style_at(prices, *t, x, annualization) {
            Some((v, m)) => {
                vol += v;
                mom += m;
                n += 1;
            }
            None => log::warn!("skipping style diagnostics at index {t}: insufficient history"),
        }
    }
    if n == 0 {
        return Err(EapoError::InsufficientData(
            "no rebalance date has 252 days of history".into(),
        ));
    }
    Ok(StyleExposure {
        volatility: vol / n as f64,
        momentum: mom / n as f64,
        n_dates: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::business_days;
    use chrono::NaiveDate;
    use nalgebra::DMatrix;

    fn panel(values: DMatrix<f64>) -> PricePanel {
        let dates = business_days(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), values.nrows());
        let tickers = (0..values.ncols()).map(|i| format!("T{i}")).collect();
        PricePanel::new(dates, tickers, values).unwrap()
    }

    #[test]
    fn constant_prices() {
        let p = panel(DMatrix::from_element(300, 2, 10.0));
        let s = style_diagnostics(&p, &[(280, DVector::from_vec(vec![0.5, 0.5]))], 252.0).unwrap();
        assert_eq!((s.volatility, s.momentum), (0.0, 0.0));
    }

    #[test]
    fn doubling_asset_momentum() {
        let g = 2f64.powf(1.0 / 252.0);
        let p = panel(DMatrix::from_fn(260, 1, |d, _| g.powi(d as i32)));
        let t = 252;
        let (_, mom) = style_at(&p, t, &DVector::from_vec(vec![1.0]), 252.0).unwrap();
        let expected = p.values[(t - 21, 0)] / p.values[(0, 0)] - 1.0;
        assert!((mom - expected).abs() < 1e-12);
        assert!((mom - (2f64.powf(231.0 / 252.0) - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn concentrated_weights_match_asset() {
        let p = panel(DMatrix::from_fn(300, 2, |d, i| {
            1.0 + 0.01 * d as f64 * (i + 1) as f64 + 0.05 * ((d * 7 + i) % 5) as f64
        }));
        let single = style_at(&p, 299, &DVector::from_vec(vec![0.0, 1.0]), 252.0).unwrap();
        let s = style_diagnostics(
            &p,
            &[
                (299, DVector::from_vec(vec![0.0, 1.0])),
                (10, DVector::from_vec(vec![0.0, 1.0])),
            ],
            252.0,
        )
        .unwrap();
        assert_eq!(s.n_dates, 1);
        assert_eq!((s.volatility, s.momentum), single);
    }
}
