//! Tail risk and distributional robustness.
//!
//! * [`cvar_empirical`] evaluates the Rockafellar–Uryasev CVaR of a loss sample.
//! * [`solve_robust_cvar`] maximizes the penalized mean minus a CVaR charge.
//! * [`dro_dual_value`] evaluates the worst-case mean of a payoff sample over a
//!   KL or χ² ball. `ℓ` is a payoff: the result is the adversary's minimum of
//!   `E_Q[ℓ]`, so it equals the sample mean at `ρ = 0` and never increases in `ρ`.

mod cvar;
mod dro;

pub use cvar::{cvar_empirical, solve_robust_cvar, tail_weights, CvarSolution, ScenarioSet};
pub use dro::{
    dro_dual_value, dro_primal_oracle, DivergenceBall, DivergenceFamily, PRIMAL_ORACLE_MAX_SUPPORT,
};
