//! LT-style rateless matrix–vector code.
//!
//! The plan materializes a finite prefix of the coded stream,
//! `⌈max_overhead · m⌉` blocks, each the plain sum of `d` distinct source
//! blocks with `d` drawn from the degree distribution. Stream block `s` goes
//! to worker `s mod N` as that worker's task `s div N`, so workers finishing
//! in lockstep deliver the stream in order.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matvec::matvec_plan;
use super::{DecodeMethod, EncodingPlan, Fraction, SchemeParams};
use crate::error::{CcmError, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeDist {
    RobustSoliton {
        c: f64,
        delta: f64,
    },
    /// Every coded block has exactly this degree.
    PointMass {
        degree: usize,
    },
    /// `probs[d − 1]` is the probability of degree `d`.
    Custom {
        probs: Vec<f64>,
    },
}

impl Default for DegreeDist {
    fn default() -> Self {
        DegreeDist::RobustSoliton { c: 0.03, delta: 0.5 }
    }
}

/// Robust soliton probabilities for degrees `1..=k` (index `d − 1`).
pub fn robust_soliton(k: usize, c: f64, delta: f64) -> Result<Vec<f64>> {
    if k == 0 || c.is_nan() || c <= 0.0 || delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(CcmError::Config(format!(
            "robust soliton needs k >= 1, c > 0, 0 < delta < 1 (k={k}, c={c}, delta={delta})"
        )));
    }
    let kf = k as f64;
    let r = c * (kf / delta).ln() * kf.sqrt();
    let pivot = ((kf / r).floor() as usize).clamp(1, k);
    let mut mu = vec![0.0; k];
    for d in 1..=k {
        let rho = if d == 1 { 1.0 / kf } else { 1.0 / (d * (d - 1)) as f64 };
        let tau = if d < pivot {
            r / (d as f64 * kf)
        } else if d == pivot {
            r * (r / delta).ln() / kf
        } else {
            0.0
        };
        mu[d - 1] = rho + tau.max(0.0);
    }
    let z: f64 = mu.iter().sum();
    Ok(mu.into_iter().map(|v| v / z).collect())
}

impl DegreeDist {
    /// Probabilities for degrees `1..=m`.
    pub fn probabilities(&self, m: usize) -> Result<Vec<f64>> {
        let probs = match self {
            DegreeDist::RobustSoliton { c, delta } => robust_soliton(m, *c, *delta)?,
            DegreeDist::PointMass { degree } => {
                if *degree == 0 || *degree > m {
                    return Err(CcmError::Config(format!("point-mass degree {degree} outside 1..={m}")));
                }
                let mut p = vec![0.0; m];
                p[degree - 1] = 1.0;
                p
            }
            DegreeDist::Custom { probs } => {
                if probs.len() > m || probs.is_empty() {
                    return Err(CcmError::Config(format!(
                        "custom degree distribution must cover 1..=d with d <= {m}"
                    )));
                }
                probs.clone()
            }
        };
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(CcmError::Config(format!(
                "degree distribution is not a probability distribution (sum {total})"
            )));
        }
        Ok(probs)
    }
}

pub fn build_fountain_matvec(
    m: usize,
    workers: usize,
    degree_dist: DegreeDist,
    seed: u64,
    max_overhead: f64,
) -> Result<EncodingPlan> {
    if m == 0 || workers == 0 {
        return Err(CcmError::Config("fountain_matvec needs m >= 1 and N >= 1".into()));
    }
    if max_overhead.is_nan() || max_overhead < 1.0 || max_overhead.is_infinite() {
        return Err(CcmError::Config(format!("max_overhead {max_overhead} must be >= 1")));
    }
    let probs = degree_dist.probabilities(m)?;
    let cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let symbols = (max_overhead * m as f64).ceil() as usize;
    let mut g = rng::seeded(seed);
    let mut rows = Vec::with_capacity(symbols);
    for _ in 0..symbols {
        let u: f64 = g.random();
        let degree = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1) + 1;
        let mut r = vec![0.0; m];
        for i in index::sample(&mut g, m, degree) {
            r[i] = 1.0;
        }
        rows.push(r);
    }
    let coeff = Matrix::from_rows(&rows)?;
    let mut worker_rows = vec![Vec::new(); workers];
    for s in 0..symbols {
        worker_rows[s % workers].push((s, None));
    }
    let gamma = worker_rows
        .iter()
        .map(|r| Fraction::new(r.len() as u64, m as u64))
        .collect();
    Ok(matvec_plan(
        SchemeParams::FountainMatvec {
            m,
            workers,
            degree_dist,
            seed,
            max_overhead,
        },
        Vec::new(),
        coeff,
        worker_rows,
        gamma,
        1,
        DecodeMethod::Peel,
    ))
}
