use nalgebra::DVector;

use crate::types::WeightVector;

/// Euclidean projection onto `{y ≥ 0, Σy = radius}` by sort-and-threshold.
pub(crate) fn project_scaled_simplex(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - radius) / (j + 1) as f64;
        if uj - t > 0.0 {
            threshold = t;
        }
    }
    v.map(|vi| (vi - threshold).max(0.0))
}

/// Euclidean projection of `v` onto the unit simplex.
pub fn project_simplex(v: &DVector<f64>) -> WeightVector {
    WeightVector::new(project_simplex_raw(v)).expect("projection lies on the simplex")
}

pub(crate) fn project_simplex_raw(v: &DVector<f64>) -> DVector<f64> {
    let y = project_scaled_simplex(v, 1.0);
    let s = y.sum();
    if s > 0.0 {
        y / s
    } else {
        DVector::from_element(v.len(), 1.0 / v.len() as f64)
    }
}

/// Projection onto `{w : ‖w‖₁ ≤ radius}`.
fn project_l1_ball(w: &DVector<f64>, radius: f64) -> DVector<f64> {
    if w.lp_norm(1) <= radius {
        return w.clone();
    }
    let mag = project_scaled_simplex(&w.abs(), radius);
    DVector::from_iterator(
        w.len(),
        w.iter().zip(mag.iter()).map(|(wi, mi)| wi.signum() * mi),
    )
}

/// Projection onto `{y : lo ≤ y ≤ hi, Σy = 1}` by bisection on the shift.
pub(crate) fn project_capped_simplex(v: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    let total = |t: f64| -> f64 {
        v.iter()
            .zip(hi.iter())
            .map(|(vi, ci)| (vi - t).clamp(0.0, *ci))
            .sum()
    };
    let mut lo_t = v.min() - 1.0;
    let mut hi_t = v.max();
    for _ in 0..200 {
        let mid = 0.5 * (lo_t + hi_t);
        if total(mid) > 1.0 {
            lo_t = mid;
        } else {
            hi_t = mid;
        }
        if hi_t - lo_t <= f64::EPSILON * (1.0 + mid.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo_t + hi_t);
    v.iter()
        .zip(hi.iter())
        .map(|(vi, ci)| (vi - t).clamp(0.0, *ci))
        .collect::<Vec<_>>()
        .into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnoverProjection {
    pub weights: WeightVector,
    pub rounds: usize,
    pub converged: bool,
}

pub const TURNOVER_MAX_ROUNDS: usize = 1000;
pub const TURNOVER_TOL: f64 = 1e-10;

/// Projection onto `{y ∈ Δ : ‖y − x_prev‖₁ ≤ τ}` by Dykstra's alternating projections.
pub fn project_turnover(x: &WeightVector, x_prev: &WeightVector, tau: f64) -> TurnoverProjection {
    let (xv, pv) = (x.as_vector(), x_prev.as_vector());
    if tau <= 0.0 {
        return TurnoverProjection {
            weights: x_prev.clone(),
            rounds: 0,
            converged: true,
        };
    }
    if (xv - pv).lp_norm(1) <= tau {
        return TurnoverProjection {
            weights: x.clone(),
            rounds: 0,
            converged: true,
        };
    }
    let n = xv.len();
    let mut y = xv.clone();
    let mut p = DVector::zeros(n);
    let mut q = DVector::zeros(n);
    let mut a = y.clone();
    let mut converged = false;
    let mut rounds = 0;
    while rounds < TURNOVER_MAX_ROUNDS {
        rounds += 1;
        let a_next = project_simplex_raw(&(&y + &p));
        p = &y + &p - &a_next;
        let b = pv + project_l1_ball(&(&a_next + &q - pv), tau);
        q = &a_next + &q - &b;
        // A repeated ℓ1 iterate alone is not a fixed point; both iterates must settle and agree.
        let moved = (&b - &y)
            .norm()
            .max((&a_next - &a).norm())
            .max((&a_next - &b).norm());
        a = a_next;
        y = b;
        if moved < TURNOVER_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("turnover projection did not converge in {TURNOVER_MAX_ROUNDS} rounds");
    }
    // Pull the simplex iterate onto the ℓ1 ball along the segment to x_prev.
    let dist = (&a - pv).lp_norm(1);
    let s = if dist > tau { tau / dist } else { 1.0 };
    let mut out = pv + (&a - pv) * s;
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    let total = out.sum();
    out /= total;
    TurnoverProjection {
        weights: WeightVector::new(out).expect("convex combination of simplex points"),
        rounds,
        converged,
    }
}
