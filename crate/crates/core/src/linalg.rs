//! Singular values, numerical rank and condition numbers.
//!
//! The SVD itself comes from `nalgebra`; this module fixes the rank cutoff
//! used everywhere in the crate: a singular value counts as nonzero when it
//! exceeds `max(rows, cols) · σ_max · 2⁻⁵²`.

use crate::error::{CcmError, Result};
use crate::matrix::Matrix;

/// Singular values in descending order (`min(rows, cols)` of them).
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn rank_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * sigma_max * f64::EPSILON
}

fn rank_from_sigma(rows: usize, cols: usize, s: &[f64]) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let cut = rank_cutoff(rows, cols, smax);
    s.iter().filter(|&&v| v > cut).count()
}

pub fn rank(m: &Matrix) -> usize {
    rank_from_sigma(m.rows(), m.cols(), &singular_values(m))
}

/// `σ_max / σ_min`; `+∞` when the matrix does not have full column rank.
pub fn condition_number(m: &Matrix) -> Result<f64> {
    let s = singular_values(m);
    if s.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(CcmError::Domain("condition number of a zero matrix".into()));
    }
    if rank_from_sigma(m.rows(), m.cols(), &s) < m.cols() {
        return Ok(f64::INFINITY);
    }
    Ok(s[0] / s[s.len() - 1])
}
