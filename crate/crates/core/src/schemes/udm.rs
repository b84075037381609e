//! Binary (or small-characteristic) block-Vandermonde encodings built from a
//! matrix representation of GF(q^k).
//!
//! The generator has `rows` block rows and one block column per worker and
//! stage. Worker `j` evaluates at `β_j = α^j`; for stage `d` the block in row
//! `i` is the Hasse derivative `C(i, d) · β_j^{i−d}` with `α ↦ C`. Coded
//! column `c` of a block column is `Σ_s G[s, c] · A_s` with source index
//! `s = k · (block row) + (row within block)`.

use super::matvec::matvec_plan;
use super::{uniform_gamma, DecodeMethod, EncodingPlan, SchemeParams};
use crate::error::{CcmError, Result};
use crate::field::{binomial, FieldRep, IntMatrix};
use crate::matrix::Matrix;

/// Full generator `G` as an integer matrix of shape `(k·rows) × (k·N·stages)`.
/// Columns are ordered by worker, then stage, then column within the block.
pub fn udm_generator(field: &FieldRep, workers: usize, rows: usize, stages: usize) -> Vec<Vec<u64>> {
    let k = field.k;
    let cols = k * workers * stages;
    let mut g = vec![vec![0u64; cols]; k * rows];
    for j in 0..workers {
        for d in 0..stages {
            for i in d..rows {
                let c = (binomial(i as u64, d as u64) % field.q as u128) as u64;
                if c == 0 {
                    continue;
                }
                let block: IntMatrix = field.scale(&field.alpha_pow((j * (i - d)) as u64), c);
                let col0 = k * (j * stages + d);
                for r in 0..k {
                    for cc in 0..k {
                        g[k * i + r][col0 + cc] = block[r][cc];
                    }
                }
            }
        }
    }
    g
}

pub fn build_udm_matvec(k: usize, q: u64, workers: usize, rows: usize, stages: usize) -> Result<EncodingPlan> {
    let field = FieldRep::new(q, k)?;
    if rows == 0 || stages == 0 || stages > rows {
        return Err(CcmError::Config(format!(
            "udm_matvec needs 1 <= stages <= rows, got rows={rows}, stages={stages}"
        )));
    }
    if workers == 0 || workers as u64 > field.order() {
        return Err(CcmError::Config(format!(
            "GF({q}^{k}) has {} nonzero points, cannot serve {workers} workers",
            field.order()
        )));
    }
    if workers * stages < rows {
        return Err(CcmError::Config(format!(
            "{workers} workers x {stages} stages cannot cover {rows} block rows"
        )));
    }
    let g = udm_generator(&field, workers, rows, stages);
    let m = k * rows;
    let coded = k * workers * stages;
    let coeff = Matrix::from_fn(coded, m, |c, s| g[s][c] as f64);
    let per_worker = k * stages;
    let worker_rows = (0..workers)
        .map(|j| (0..per_worker).map(|t| (j * per_worker + t, None)).collect())
        .collect();
    Ok(matvec_plan(
        SchemeParams::UdmMatvec {
            q,
            k,
            workers,
            rows,
            stages,
        },
        Vec::new(),
        coeff,
        worker_rows,
        uniform_gamma(workers, stages as u64, rows as u64),
        k,
        DecodeMethod::Dense,
    ))
}
