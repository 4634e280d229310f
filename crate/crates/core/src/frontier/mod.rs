//! Return–intensity trade-off curves, Γ-sensitivity, and a tiny robust dynamic program.

mod bellman;
mod pareto;

pub use bellman::{
    bellman_flat_enumeration, bellman_tiny, random_tiny_spec, stage_payoff, TinyDynamicSpec,
    MAX_GRID_POINTS,
};
pub use pareto::{
    frontier_diagnostics, frontier_diagnostics_with_tol, pareto_sweep, pareto_sweep_regularized,
    value_curve_gamma, FrontierPoint, FrontierReport,
};
