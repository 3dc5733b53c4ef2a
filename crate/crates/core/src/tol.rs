//! Numeric tolerances shared across the crate.

/// Allowed deviation of a probability vector's total mass from 1.
pub const SUM: f64 = 1e-12;

/// Tolerance for equalities between conditional expectations and for
/// pointwise verification scans.
pub const EQ: f64 = 1e-9;

/// Primal feasibility tolerance for linear programs.
pub const LP: f64 = 1e-9;

/// `|a - b| <= EQ`, relaxed proportionally for large magnitudes.
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ * (1.0 + a.abs().max(b.abs()))
}
