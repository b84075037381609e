use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    resolve_points, uniform_gamma, BlockLayout, CodedTask, DecodeMethod, EncodingPlan, EvalNode, Fraction, SchemeParams,
};
use crate::error::{CcmError, Result};
use crate::matrix::Matrix;
use crate::rng;

pub(crate) fn matvec_unknowns(m: usize) -> (Vec<String>, Vec<Vec<usize>>) {
    let labels = (0..m).map(|i| format!("A{i}^T x")).collect();
    let targets = (0..m).map(|i| vec![i]).collect();
    (labels, targets)
}

/// Assemble a matrix–vector plan from its coded-A rows and per-worker task
/// lists given as `(coded row, node)` pairs. Recovery rows equal the coded
/// rows since the unknowns are the `A_iᵀx` themselves.
pub(crate) fn matvec_plan(
    params: SchemeParams,
    eval_points: Vec<f64>,
    coeff_a: Matrix,
    worker_rows: Vec<Vec<(usize, Option<EvalNode>)>>,
    gamma_a: Vec<Fraction>,
    tasks_per_stage: usize,
    decode_method: DecodeMethod,
) -> EncodingPlan {
    let m = coeff_a.cols();
    let assignments = worker_rows
        .into_iter()
        .enumerate()
        .map(|(w, rows)| {
            rows.into_iter()
                .enumerate()
                .map(|(seq, (a_index, node))| CodedTask {
                    worker: w,
                    seq,
                    a_index,
                    b_index: None,
                    recovery_row: coeff_a.row(a_index).to_vec(),
                    node,
                })
                .collect()
        })
        .collect();
    let (unknowns, targets) = matvec_unknowns(m);
    EncodingPlan {
        kind: params.kind(),
        params,
        eval_points,
        layout: BlockLayout { p: 1, m, n: 1 },
        coeff_a,
        coeff_b: None,
        assignments,
        gamma_a,
        gamma_b: None,
        unknowns,
        targets,
        tasks_per_stage,
        decode_method,
    }
}

/// Cyclic repetition: `m = N` blocks, worker `i` computes `A_iᵀx` and then
/// `(A_{i+1} + A_{i+2})ᵀx` (indices mod `N`).
pub fn build_repetition(workers: usize) -> Result<EncodingPlan> {
    if workers < 3 {
        return Err(CcmError::Config(format!(
            "repetition needs at least 3 workers, got {workers}"
        )));
    }
    let n = workers;
    let mut coeff = Matrix::zeros(2 * n, n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        coeff[(2 * i, i)] = 1.0;
        coeff[(2 * i + 1, (i + 1) % n)] = 1.0;
        coeff[(2 * i + 1, (i + 2) % n)] = 1.0;
        rows.push(vec![(2 * i, None), (2 * i + 1, None)]);
    }
    Ok(matvec_plan(
        SchemeParams::Repetition { workers },
        Vec::new(),
        coeff,
        rows,
        uniform_gamma(n, 2, n as u64),
        1,
        DecodeMethod::Dense,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdsGenerator {
    /// Worker `l` holds `A(z_l) = Σ_i A_i z_lⁱ`.
    Vandermonde { eval_points: Option<Vec<f64>> },
    /// Standard Gaussian generator entries drawn from `seed`.
    Random { seed: u64 },
}

pub fn build_mds_matvec(m: usize, workers: usize, generator: MdsGenerator) -> Result<EncodingPlan> {
    if m == 0 || workers < m {
        return Err(CcmError::Config(format!(
            "mds_matvec needs 1 <= m <= N, got m={m}, N={workers}"
        )));
    }
    let rows = (0..workers).map(|l| vec![(l, None)]).collect::<Vec<_>>();
    let gamma = uniform_gamma(workers, 1, m as u64);
    match generator {
        MdsGenerator::Vandermonde { eval_points } => {
            let pts = resolve_points(&eval_points, workers)?;
            let coeff = Matrix::from_fn(workers, m, |l, i| pts[l].powi(i as i32));
            let rows = (0..workers)
                .map(|l| vec![(l, Some(EvalNode { z: pts[l], order: 0 }))])
                .collect();
            Ok(matvec_plan(
                SchemeParams::MdsMatvec {
                    m,
                    workers,
                    eval_points: Some(pts.clone()),
                    random_seed: None,
                },
                pts,
                coeff,
                rows,
                gamma,
                1,
                DecodeMethod::Interpolate,
            ))
        }
        MdsGenerator::Random { seed } => {
            let mut g = rng::seeded(seed);
            let data: Vec<f64> = (0..workers * m).map(|_| StandardNormal.sample(&mut g)).collect();
            let coeff = Matrix::new(workers, m, data)?;
            Ok(matvec_plan(
                SchemeParams::MdsMatvec {
                    m,
                    workers,
                    eval_points: None,
                    random_seed: Some(seed),
                },
                Vec::new(),
                coeff,
                rows,
                gamma,
                1,
                DecodeMethod::Dense,
            ))
        }
    }
}

/// Worker `i` computes `A(z_i)ᵀx` and then `A'(z_i)ᵀx`, where
/// `A(z) = Σ_k A_k z^k`.
pub fn build_derivative_matvec(m: usize, workers: usize, eval_points: Option<Vec<f64>>) -> Result<EncodingPlan> {
    if m == 0 || 2 * workers < m {
        return Err(CcmError::Config(format!(
            "derivative_matvec needs 1 <= m <= 2N, got m={m}, N={workers}"
        )));
    }
    let pts = resolve_points(&eval_points, workers)?;
    let coeff = Matrix::from_fn(2 * workers, m, |row, k| {
        let z = pts[row / 2];
        if row % 2 == 0 {
            z.powi(k as i32)
        } else if k == 0 {
            0.0
        } else {
            k as f64 * z.powi(k as i32 - 1)
        }
    });
    let rows = (0..workers)
        .map(|i| {
            vec![
                (2 * i, Some(EvalNode { z: pts[i], order: 0 })),
                (2 * i + 1, Some(EvalNode { z: pts[i], order: 1 })),
            ]
        })
        .collect();
    Ok(matvec_plan(
        SchemeParams::DerivativeMatvec {
            m,
            workers,
            eval_points: Some(pts.clone()),
        },
        pts,
        coeff,
        rows,
        uniform_gamma(workers, 2, m as u64),
        1,
        DecodeMethod::Hermite,
    ))
}
