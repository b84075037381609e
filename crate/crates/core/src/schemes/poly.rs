//! Polynomial matrix–matrix codes: polynomial, MatDot and entangled.
//!
//! All three encode `A(z) = Σ A_s z^{a(s)}` and `B(z) = Σ B_s z^{b(s)}`; worker
//! `i` computes `Aᵀ(z_i) B(z_i)`. The unknowns are the coefficients of the
//! product polynomial, some of which are the wanted blocks.

use super::{
    resolve_points, uniform_gamma, BlockLayout, CodedTask, DecodeMethod, EncodingPlan, EvalNode, SchemeParams,
};
use crate::error::{CcmError, Result};
use crate::matrix::Matrix;

struct PolySpec {
    p: usize,
    m: usize,
    n: usize,
    /// Exponent of source block `A_{k,j}` at flat index `k·m + j`.
    a_exp: Vec<usize>,
    /// Exponent of source block `B_{k,l}` at flat index `k·n + l`.
    b_exp: Vec<usize>,
    /// Coefficient index holding output block `(j, l)`.
    targets: Vec<Vec<usize>>,
    target_label: fn(usize, usize) -> String,
}

fn poly_plan(params: SchemeParams, spec: PolySpec, workers: usize, pts: Vec<f64>) -> EncodingPlan {
    let PolySpec {
        p,
        m,
        n,
        a_exp,
        b_exp,
        targets,
        target_label,
    } = spec;
    let degree = a_exp.iter().max().unwrap() + b_exp.iter().max().unwrap();
    let num_unknowns = degree + 1;
    let mut unknowns: Vec<String> = (0..num_unknowns).map(|e| format!("interference z^{e}")).collect();
    for (j, row) in targets.iter().enumerate() {
        for (l, &e) in row.iter().enumerate() {
            unknowns[e] = format!("{} (z^{e})", target_label(j, l));
        }
    }
    let coeff_a = Matrix::from_fn(workers, p * m, |i, s| pts[i].powi(a_exp[s] as i32));
    let coeff_b = Matrix::from_fn(workers, p * n, |i, s| pts[i].powi(b_exp[s] as i32));
    let assignments = (0..workers)
        .map(|i| {
            vec![CodedTask {
                worker: i,
                seq: 0,
                a_index: i,
                b_index: Some(i),
                recovery_row: (0..num_unknowns).map(|e| pts[i].powi(e as i32)).collect(),
                node: Some(EvalNode { z: pts[i], order: 0 }),
            }]
        })
        .collect();
    EncodingPlan {
        kind: params.kind(),
        params,
        eval_points: pts,
        layout: BlockLayout { p, m, n },
        coeff_a,
        coeff_b: Some(coeff_b),
        assignments,
        gamma_a: uniform_gamma(workers, 1, (p * m) as u64),
        gamma_b: Some(uniform_gamma(workers, 1, (p * n) as u64)),
        unknowns,
        targets,
        tasks_per_stage: 1,
        decode_method: DecodeMethod::Interpolate,
    }
}

fn check_workers(name: &str, workers: usize, threshold: usize) -> Result<()> {
    if workers < threshold {
        return Err(CcmError::Config(format!(
            "{name} has recovery threshold {threshold} but only {workers} workers"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, vals: &[(&str, usize)]) -> Result<()> {
    for (k, v) in vals {
        if *v == 0 {
            return Err(CcmError::Config(format!("{name}: {k} must be positive")));
        }
    }
    Ok(())
}

/// `A(z) = Σ_j A_j z^j`, `B(z) = Σ_l B_l z^{lm}`; threshold `mn`.
pub fn build_poly_matmul(m: usize, n: usize, workers: usize, eval_points: Option<Vec<f64>>) -> Result<EncodingPlan> {
    check_positive("poly_matmul", &[("m", m), ("n", n)])?;
    check_workers("poly_matmul", workers, m * n)?;
    let pts = resolve_points(&eval_points, workers)?;
    let spec = PolySpec {
        p: 1,
        m,
        n,
        a_exp: (0..m).collect(),
        b_exp: (0..n).map(|l| l * m).collect(),
        targets: (0..m).map(|j| (0..n).map(|l| j + l * m).collect()).collect(),
        target_label: |j, l| format!("A{j}^T B{l}"),
    };
    let params = SchemeParams::PolyMatmul {
        m,
        n,
        workers,
        eval_points: Some(pts.clone()),
    };
    Ok(poly_plan(params, spec, workers, pts))
}

/// `A(z) = Σ_i A_i z^{p−1−i}`, `B(z) = Σ_i B_i z^i`; `AᵀB` is the coefficient
/// of `z^{p−1}`; threshold `2p − 1`.
pub fn build_matdot(p: usize, workers: usize, eval_points: Option<Vec<f64>>) -> Result<EncodingPlan> {
    check_positive("matdot", &[("p", p)])?;
    check_workers("matdot", workers, 2 * p - 1)?;
    let pts = resolve_points(&eval_points, workers)?;
    let spec = PolySpec {
        p,
        m: 1,
        n: 1,
        a_exp: (0..p).map(|i| p - 1 - i).collect(),
        b_exp: (0..p).collect(),
        targets: vec![vec![p - 1]],
        target_label: |_, _| "sum_i A_i^T B_i".to_string(),
    };
    let params = SchemeParams::Matdot {
        p,
        workers,
        eval_points: Some(pts.clone()),
    };
    Ok(poly_plan(params, spec, workers, pts))
}

/// `A_{k,j} ↦ z^{k+pj}`, `B_{k,l} ↦ z^{p−1−k+pml}`; output block `(j, l)` is
/// the coefficient of `z^{p−1+pj+pml}`; threshold `pmn + p − 1`.
pub fn build_entangled(
    p: usize,
    m: usize,
    n: usize,
    workers: usize,
    eval_points: Option<Vec<f64>>,
) -> Result<EncodingPlan> {
    check_positive("entangled", &[("p", p), ("m", m), ("n", n)])?;
    check_workers("entangled", workers, p * m * n + p - 1)?;
    let pts = resolve_points(&eval_points, workers)?;
    let mut a_exp = vec![0; p * m];
    for k in 0..p {
        for j in 0..m {
            a_exp[k * m + j] = k + p * j;
        }
    }
    let mut b_exp = vec![0; p * n];
    for k in 0..p {
        for l in 0..n {
            b_exp[k * n + l] = p - 1 - k + p * m * l;
        }
    }
    let spec = PolySpec {
        p,
        m,
        n,
        a_exp,
        b_exp,
        targets: (0..m)
            .map(|j| (0..n).map(|l| p - 1 + p * j + p * m * l).collect())
            .collect(),
        target_label: |j, l| format!("sum_k A{{k,{j}}}^T B{{k,{l}}}"),
    };
    let params = SchemeParams::Entangled {
        p,
        m,
        n,
        workers,
        eval_points: Some(pts.clone()),
    };
    Ok(poly_plan(params, spec, workers, pts))
}

/// Exponent of each source block of `A` (flat index `k·m + j`) and of `B`
/// (flat index `k·n + l`), recovered from a plan built with unit-free points.
pub fn poly_exponents(plan: &super::EncodingPlan) -> Option<(Vec<usize>, Vec<usize>)> {
    // Every polynomial plan evaluates z_i^e, so the exponent is log base z of
    // the coefficient at any point with |z| ∉ {0, 1}.
    let (i, z) = plan
        .eval_points
        .iter()
        .enumerate()
        .find(|(_, z)| z.abs() > 0.0 && (z.abs() - 1.0).abs() > 1e-3)?;
    let exp_of = |c: f64| (c.abs().ln() / z.abs().ln()).round() as usize;
    let a = plan.coeff_a.row(i).iter().map(|&c| exp_of(c)).collect();
    let b = plan.coeff_b.as_ref()?.row(i).iter().map(|&c| exp_of(c)).collect();
    Some((a, b))
}
