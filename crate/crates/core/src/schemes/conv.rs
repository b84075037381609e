//! Convolutional matrix–vector codes over the delay variable `D`.
//!
//! The `m` blocks are grouped into `k = systematic` polynomials
//! `𝒜_i(D) = Σ_{s<ℓ} A_{iℓ+s} D^s` with `ℓ = m / k`. Workers `0..k` store the
//! `𝒜_i` themselves; parity worker `j` (numbered from 0) stores
//! `Σ_i D^{ij} 𝒜_i(D)`, which has `ℓ + (k − 1)j` coefficient blocks. Each
//! worker's tasks are its coefficient blocks in ascending power of `D`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matvec::matvec_plan;
use super::{DecodeMethod, EncodingPlan, Fraction, SchemeParams};
use crate::error::{CcmError, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvMode {
    /// All generator taps equal one.
    #[default]
    Ones,
    /// Each nonzero coefficient scaled by an i.i.d. uniform(0.5, 1.5) draw.
    Random { seed: u64 },
}

pub fn build_conv_matvec(m: usize, workers: usize, systematic: usize, mode: ConvMode) -> Result<EncodingPlan> {
    if systematic == 0 || m == 0 || !m.is_multiple_of(systematic) {
        return Err(CcmError::Config(format!(
            "conv_matvec: m={m} must be a positive multiple of systematic={systematic}"
        )));
    }
    if workers < systematic {
        return Err(CcmError::Config(format!(
            "conv_matvec needs at least {systematic} workers, got {workers}"
        )));
    }
    let k = systematic;
    let ell = m / k;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut worker_rows = Vec::with_capacity(workers);
    let mut gamma = Vec::with_capacity(workers);
    for i in 0..k {
        let mut mine = Vec::new();
        for s in 0..ell {
            let mut r = vec![0.0; m];
            r[i * ell + s] = 1.0;
            mine.push((rows.len(), None));
            rows.push(r);
        }
        gamma.push(Fraction::new(ell as u64, m as u64));
        worker_rows.push(mine);
    }
    for j in 0..workers - k {
        let len = ell + (k - 1) * j;
        let mut mine = Vec::new();
        for e in 0..len {
            let mut r = vec![0.0; m];
            for i in 0..k {
                if let Some(s) = e.checked_sub(i * j).filter(|&s| s < ell) {
                    r[i * ell + s] = 1.0;
                }
            }
            mine.push((rows.len(), None));
            rows.push(r);
        }
        gamma.push(Fraction::new(len as u64, m as u64));
        worker_rows.push(mine);
    }
    if let ConvMode::Random { seed } = mode {
        let mut g = rng::seeded(seed);
        for r in rows.iter_mut() {
            for v in r.iter_mut().filter(|v| **v != 0.0) {
                *v *= g.random_range(0.5..1.5);
            }
        }
    }
    let coeff = Matrix::from_rows(&rows)?;
    let method = match mode {
        ConvMode::Ones => DecodeMethod::Peel,
        ConvMode::Random { .. } => DecodeMethod::LeastSquares,
    };
    Ok(matvec_plan(
        SchemeParams::ConvMatvec {
            m,
            workers,
            systematic,
            mode,
        },
        Vec::new(),
        coeff,
        worker_rows,
        gamma,
        1,
        method,
    ))
}
