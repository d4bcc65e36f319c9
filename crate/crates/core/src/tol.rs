//! Numerical tolerances shared across the crate.
//!
//! Every threshold that decides between "passed" and "failed" lives here so
//! it can be tuned in one place.

/// Relative pivot floor for the symmetric factorization.
pub const SPD_PIVOT: f64 = 1e-14;

/// Residual target for `solve_spd`, relative to `1 + |rhs|`.
pub const SPD_RESIDUAL: f64 = 1e-10;

/// Root residual target, relative to `max(|a|_inf, sum |a_k| |z|^k)`.
pub const ROOT_RESIDUAL: f64 = 1e-8;

/// Iteration cap for the simultaneous root iteration.
pub const ROOT_MAX_ITERS: usize = 10_000;

/// Bisection width at which scalar searches stop.
pub const BISECTION: f64 = 1e-13;

/// Default feasibility tolerance for primal-dual iterates.
pub const FEASIBILITY: f64 = 1e-8;

/// Default accuracy threshold on the duality gap.
pub const GAP_EPSILON: f64 = 1e-10;

/// Gap below which solver iterates are recorded for plotting.
pub const RECORD_GAP: f64 = 1e-3;

/// Default max-norm tolerance for cyclic cluster matching.
pub const ORBIT_MATCH: f64 = 1e-7;
