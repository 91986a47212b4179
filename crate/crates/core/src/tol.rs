//! Default numerical tolerances shared across the crate.
//!
//! Each module accepts overrides through its options struct; these are the
//! values used when nothing else is specified.

/// Allowed deviation of a probability measure's total mass from 1.
pub const MASS_TOL: f64 = 1e-9;
/// Quadrature-level accuracy for grid integrals.
pub const QUAD_TOL: f64 = 1e-6;
/// Reference densities at or below this value are treated as zero.
pub const DOMINANCE_TOL: f64 = 1e-12;
/// Relative eigenvalue threshold for rank decisions (scaled by max(λ_max, 1)).
pub const EIGEN_TOL_REL: f64 = 1e-8;
/// Relative jump that marks a discontinuity in a speed profile.
pub const JUMP_TOL: f64 = 0.1;
/// Relative length improvement below which path optimization stops.
pub const OPTIMIZER_TOL: f64 = 1e-6;
/// Metric-equality tolerance used by sufficiency checks.
pub const SUFF_TOL: f64 = 1e-7;
/// Allowed negative slack in the monotonicity gap.
pub const MONO_TOL: f64 = 1e-9;
/// Allowed negative eigenvalue of MSE / variance forms on exact backends.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed negative eigenvalue of the Cramer-Rao gap on exact backends.
pub const CR_TOL: f64 = 1e-7;
/// Relative tolerance for gradients leaving the range of the Fisher matrix.
pub const RANGE_TOL: f64 = 1e-8;

/// Absolute eigenvalue threshold for a spectrum with largest eigenvalue `lambda_max`.
pub fn eigen_tol(lambda_max: f64) -> f64 {
    EIGEN_TOL_REL * lambda_max.max(1.0)
}
