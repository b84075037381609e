//! Coding schemes.
//!
//! Every scheme is reduced to the same shape, an [`EncodingPlan`]:
//!
//! * `A` is split into a `p × m` grid of blocks and `B` into a `p × n` grid
//!   (matrix–vector kinds use `p = n = 1` and send the whole right-hand side
//!   to every worker).
//! * `coeff_a` maps the `p·m` source blocks (row-major) to coded blocks;
//!   `coeff_b` does the same for `B`.
//! * Each worker runs an ordered list of [`CodedTask`]s, each the product
//!   `Ãᵀ B̃` of one coded block pair.
//! * Each task result is a known linear combination (`recovery_row`) of a
//!   list of unknown blocks. Some unknowns are targets (blocks of `AᵀB`);
//!   the rest are interference terms that the decoder solves for and drops.

mod conv;
mod fountain;
mod matvec;
mod poly;
mod udm;

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{CcmError, Result};
use crate::matrix::{direct_product, partition, FlopCount, Matrix};

pub use conv::{build_conv_matvec, ConvMode};
pub use fountain::{build_fountain_matvec, robust_soliton, DegreeDist};
pub use matvec::{build_derivative_matvec, build_mds_matvec, build_repetition, MdsGenerator};
pub use poly::{build_entangled, build_matdot, build_poly_matmul, poly_exponents};
pub use udm::{build_udm_matvec, udm_generator};

pub type Fraction = Ratio<u64>;

/// `N` evenly spaced points `z_i = −1 + 2i/N` covering `[−1, 1)`.
pub fn default_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect()
}

pub(crate) fn resolve_points(points: &Option<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    let pts = match points {
        Some(p) => p.clone(),
        None => default_points(n),
    };
    if pts.len() != n {
        return Err(CcmError::Config(format!(
            "expected {n} evaluation points, got {}",
            pts.len()
        )));
    }
    if let Some(bad) = pts.iter().find(|v| !v.is_finite()) {
        return Err(CcmError::Config(format!("evaluation point {bad} is not finite")));
    }
    for i in 0..n {
        for j in 0..i {
            if pts[i] == pts[j] {
                return Err(CcmError::Config(format!(
                    "duplicate evaluation point {} (workers {j} and {i})",
                    pts[i]
                )));
            }
        }
    }
    Ok(pts)
}

fn default_udm_q() -> u64 {
    2
}
fn default_udm_k() -> usize {
    3
}
fn default_udm_workers() -> usize {
    4
}
fn default_udm_rows() -> usize {
    3
}
fn default_one() -> usize {
    1
}
fn default_conv_workers() -> usize {
    4
}
fn default_systematic() -> usize {
    2
}
fn default_max_overhead() -> f64 {
    3.0
}

/// Scheme selection and parameters. `workers` is the number of workers `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeParams {
    Repetition {
        #[serde(alias = "N")]
        workers: usize,
    },
    MdsMatvec {
        m: usize,
        #[serde(alias = "N")]
        workers: usize,
        #[serde(default)]
        eval_points: Option<Vec<f64>>,
        /// Use an i.i.d. Gaussian generator drawn from this seed instead of
        /// a Vandermonde matrix.
        #[serde(default)]
        random_seed: Option<u64>,
    },
    DerivativeMatvec {
        m: usize,
        #[serde(alias = "N")]
        workers: usize,
        #[serde(default)]
        eval_points: Option<Vec<f64>>,
    },
    UdmMatvec {
        #[serde(default = "default_udm_q")]
        q: u64,
        #[serde(default = "default_udm_k")]
        k: usize,
        #[serde(default = "default_udm_workers", alias = "N")]
        workers: usize,
        /// Block rows of the generator; `m = k · rows`.
        #[serde(default = "default_udm_rows")]
        rows: usize,
        /// Hasse-derivative stages per worker (1 = plain evaluation).
        #[serde(default = "default_one")]
        stages: usize,
    },
    ConvMatvec {
        m: usize,
        #[serde(default = "default_conv_workers", alias = "N")]
        workers: usize,
        #[serde(default = "default_systematic")]
        systematic: usize,
        #[serde(default)]
        mode: ConvMode,
    },
    FountainMatvec {
        m: usize,
        #[serde(alias = "N")]
        workers: usize,
        #[serde(default)]
        degree_dist: DegreeDist,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_max_overhead")]
        max_overhead: f64,
    },
    PolyMatmul {
        m: usize,
        n: usize,
        #[serde(alias = "N")]
        workers: usize,
        #[serde(default)]
        eval_points: Option<Vec<f64>>,
    },
    Matdot {
        p: usize,
        #[serde(alias = "N")]
        workers: usize,
        #[serde(default)]
        eval_points: Option<Vec<f64>>,
    },
    Entangled {
        p: usize,
        m: usize,
        n: usize,
        #[serde(alias = "N")]
        workers: usize,
        #[serde(default)]
        eval_points: Option<Vec<f64>>,
    },
}

/// One line per scheme kind: name and parameters, for help text.
pub const SCHEME_HELP: &[(&str, &str)] = &[
    ("repetition", "workers (N>=3; m=N, two tasks per worker)"),
    ("mds_matvec", "m, workers, [eval_points], [random_seed]"),
    ("derivative_matvec", "m, workers, [eval_points]"),
    ("udm_matvec", "[q=2], [k=3], [workers=4], [rows=3], [stages=1]"),
    (
        "conv_matvec",
        "m, [workers=4], [systematic=2], [mode=ones|{random:{seed}}]",
    ),
    (
        "fountain_matvec",
        "m, workers, [degree_dist], [seed], [max_overhead=3.0]",
    ),
    ("poly_matmul", "m, n, workers, [eval_points]"),
    ("matdot", "p, workers, [eval_points]"),
    ("entangled", "p, m, n, workers, [eval_points]"),
];

impl SchemeParams {
    pub fn kind(&self) -> SchemeKind {
        match self {
            SchemeParams::Repetition { .. } => SchemeKind::Repetition,
            SchemeParams::MdsMatvec { .. } => SchemeKind::MdsMatvec,
            SchemeParams::DerivativeMatvec { .. } => SchemeKind::DerivativeMatvec,
            SchemeParams::UdmMatvec { .. } => SchemeKind::UdmMatvec,
            SchemeParams::ConvMatvec { .. } => SchemeKind::ConvMatvec,
            SchemeParams::FountainMatvec { .. } => SchemeKind::FountainMatvec,
            SchemeParams::PolyMatmul { .. } => SchemeKind::PolyMatmul,
            SchemeParams::Matdot { .. } => SchemeKind::Matdot,
            SchemeParams::Entangled { .. } => SchemeKind::Entangled,
        }
    }

    pub fn workers(&self) -> usize {
        match *self {
            SchemeParams::Repetition { workers }
            | SchemeParams::MdsMatvec { workers, .. }
            | SchemeParams::DerivativeMatvec { workers, .. }
            | SchemeParams::UdmMatvec { workers, .. }
            | SchemeParams::ConvMatvec { workers, .. }
            | SchemeParams::FountainMatvec { workers, .. }
            | SchemeParams::PolyMatmul { workers, .. }
            | SchemeParams::Matdot { workers, .. }
            | SchemeParams::Entangled { workers, .. } => workers,
        }
    }

    /// Build the plan described by these parameters.
    pub fn build(&self) -> Result<EncodingPlan> {
        match self.clone() {
            SchemeParams::Repetition { workers } => build_repetition(workers),
            SchemeParams::MdsMatvec {
                m,
                workers,
                eval_points,
                random_seed,
            } => {
                let gen = match random_seed {
                    Some(seed) => MdsGenerator::Random { seed },
                    None => MdsGenerator::Vandermonde { eval_points },
                };
                build_mds_matvec(m, workers, gen)
            }
            SchemeParams::DerivativeMatvec {
                m,
                workers,
                eval_points,
            } => build_derivative_matvec(m, workers, eval_points),
            SchemeParams::UdmMatvec {
                q,
                k,
                workers,
                rows,
                stages,
            } => build_udm_matvec(k, q, workers, rows, stages),
            SchemeParams::ConvMatvec {
                m,
                workers,
                systematic,
                mode,
            } => build_conv_matvec(m, workers, systematic, mode),
            SchemeParams::FountainMatvec {
                m,
                workers,
                degree_dist,
                seed,
                max_overhead,
            } => build_fountain_matvec(m, workers, degree_dist, seed, max_overhead),
            SchemeParams::PolyMatmul {
                m,
                n,
                workers,
                eval_points,
            } => build_poly_matmul(m, n, workers, eval_points),
            SchemeParams::Matdot {
                p,
                workers,
                eval_points,
            } => build_matdot(p, workers, eval_points),
            SchemeParams::Entangled {
                p,
                m,
                n,
                workers,
                eval_points,
            } => build_entangled(p, m, n, workers, eval_points),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Repetition,
    MdsMatvec,
    DerivativeMatvec,
    UdmMatvec,
    ConvMatvec,
    FountainMatvec,
    PolyMatmul,
    Matdot,
    Entangled,
}

impl SchemeKind {
    pub fn is_matvec(self) -> bool {
        !matches!(
            self,
            SchemeKind::PolyMatmul | SchemeKind::Matdot | SchemeKind::Entangled
        )
    }
}

/// How `decode` recovers the unknowns for a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMethod {
    /// Lagrange interpolation of a polynomial in `z`.
    Interpolate,
    /// Interpolation from values and first derivatives.
    Hermite,
    /// Peeling, falling back to a dense solve when stuck.
    Peel,
    LeastSquares,
    Dense,
}

/// Evaluation node of a task whose result is `u^{(order)}(z)` for the plan's
/// result polynomial `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalNode {
    pub z: f64,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodedTask {
    pub worker: usize,
    pub seq: usize,
    /// Row of `coeff_a`.
    pub a_index: usize,
    /// Row of `coeff_b`; `None` means the whole right-hand side.
    pub b_index: Option<usize>,
    /// The result equals `Σ_u recovery_row[u] · unknown_u`.
    pub recovery_row: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<EvalNode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: CodedTask,
    pub value: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub p: usize,
    pub m: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan {
    pub kind: SchemeKind,
    pub params: SchemeParams,
    pub eval_points: Vec<f64>,
    pub layout: BlockLayout,
    #[serde(rename = "coeffA")]
    pub coeff_a: Matrix,
    #[serde(rename = "coeffB")]
    pub coeff_b: Option<Matrix>,
    pub assignments: Vec<Vec<CodedTask>>,
    #[serde(rename = "gammaA")]
    pub gamma_a: Vec<Fraction>,
    #[serde(rename = "gammaB")]
    pub gamma_b: Option<Vec<Fraction>>,
    pub unknowns: Vec<String>,
    /// `targets[i][j]` is the unknown holding block `(i, j)` of `AᵀB`.
    pub targets: Vec<Vec<usize>>,
    /// Consecutive tasks that form one unit of prefix progress.
    pub tasks_per_stage: usize,
    pub decode_method: DecodeMethod,
}

impl EncodingPlan {
    pub fn workers(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn total_tasks(&self) -> usize {
        self.assignments.iter().map(Vec::len).sum()
    }

    pub fn task(&self, worker: usize, seq: usize) -> Option<&CodedTask> {
        self.assignments.get(worker)?.get(seq)
    }

    /// Check the structural invariants every builder must satisfy.
    pub fn validate(&self) -> Result<()> {
        let u = self.num_unknowns();
        let src_a = self.layout.p * self.layout.m;
        if self.coeff_a.cols() != src_a {
            return Err(CcmError::Plan(format!(
                "coeffA has {} columns, expected {src_a}",
                self.coeff_a.cols()
            )));
        }
        if self.tasks_per_stage == 0 {
            return Err(CcmError::Plan("tasks_per_stage must be positive".into()));
        }
        for (w, tasks) in self.assignments.iter().enumerate() {
            if tasks.len() % self.tasks_per_stage != 0 {
                return Err(CcmError::Plan(format!(
                    "worker {w} has {} tasks, not a multiple of the stage size",
                    tasks.len()
                )));
            }
            for (s, t) in tasks.iter().enumerate() {
                if t.worker != w || t.seq != s {
                    return Err(CcmError::Plan(format!("task ({w},{s}) is mislabeled")));
                }
                if t.a_index >= self.coeff_a.rows() || t.recovery_row.len() != u {
                    return Err(CcmError::Plan(format!("task ({w},{s}) is malformed")));
                }
                match (t.b_index, &self.coeff_b) {
                    (Some(b), Some(cb)) if b < cb.rows() => {}
                    (None, None) => {}
                    _ => return Err(CcmError::Plan(format!("task ({w},{s}) has a bad B index"))),
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn uniform_gamma(workers: usize, num: u64, den: u64) -> Vec<Fraction> {
    vec![Fraction::new(num, den); workers]
}

/// The coded blocks one worker holds.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerBlocks {
    pub worker: usize,
    pub a: BTreeMap<usize, Matrix>,
    pub b: BTreeMap<usize, Matrix>,
    /// Right-hand side for matrix–vector kinds.
    pub rhs: Option<Matrix>,
}

fn combine(coeffs: &[f64], blocks: &[Matrix]) -> Matrix {
    let (r, c) = blocks[0].shape();
    let mut acc = Matrix::zeros(r, c);
    for (&g, b) in coeffs.iter().zip(blocks) {
        if g != 0.0 {
            acc.axpy(g, b);
        }
    }
    acc
}

/// Compute every worker's coded blocks from the payload.
pub fn encode(plan: &EncodingPlan, a: &Matrix, b: &Matrix) -> Result<Vec<WorkerBlocks>> {
    let BlockLayout { p, m, n } = plan.layout;
    if a.rows() != b.rows() {
        return Err(CcmError::Dimension(format!(
            "A has {} rows but B has {}",
            a.rows(),
            b.rows()
        )));
    }
    let a_src = partition(a, p, m)?.into_blocks();
    let coded_a: Vec<Matrix> = (0..plan.coeff_a.rows())
        .map(|i| combine(plan.coeff_a.row(i), &a_src))
        .collect();
    let coded_b: Option<Vec<Matrix>> = match &plan.coeff_b {
        Some(cb) => {
            let b_src = partition(b, p, n)?.into_blocks();
            Some((0..cb.rows()).map(|i| combine(cb.row(i), &b_src)).collect())
        }
        None => None,
    };
    Ok(plan
        .assignments
        .iter()
        .enumerate()
        .map(|(w, tasks)| {
            let mut blocks = WorkerBlocks {
                worker: w,
                a: BTreeMap::new(),
                b: BTreeMap::new(),
                rhs: None,
            };
            for t in tasks {
                blocks.a.entry(t.a_index).or_insert_with(|| coded_a[t.a_index].clone());
                if let (Some(bi), Some(cb)) = (t.b_index, &coded_b) {
                    blocks.b.entry(bi).or_insert_with(|| cb[bi].clone());
                }
            }
            if coded_b.is_none() {
                blocks.rhs = Some(b.clone());
            }
            blocks
        })
        .collect())
}

/// Run `tasks` in order on a worker's blocks.
pub fn worker_compute(blocks: &WorkerBlocks, tasks: &[CodedTask]) -> Result<(Vec<TaskResult>, FlopCount)> {
    let mut flops = 0u64;
    let mut out = Vec::with_capacity(tasks.len());
    for t in tasks {
        let a = blocks
            .a
            .get(&t.a_index)
            .ok_or_else(|| CcmError::Plan(format!("worker {} lacks coded A block {}", blocks.worker, t.a_index)))?;
        let b = match t.b_index {
            Some(bi) => blocks
                .b
                .get(&bi)
                .ok_or_else(|| CcmError::Plan(format!("worker {} lacks coded B block {bi}", blocks.worker)))?,
            None => blocks
                .rhs
                .as_ref()
                .ok_or_else(|| CcmError::Plan(format!("worker {} lacks the vector", blocks.worker)))?,
        };
        let (value, f) = direct_product(a, b)?;
        flops += f.0;
        out.push(TaskResult { task: t.clone(), value });
    }
    Ok((out, FlopCount(flops)))
}

/// Encode and run every task on every worker.
pub fn compute_all(plan: &EncodingPlan, a: &Matrix, b: &Matrix) -> Result<Vec<Vec<TaskResult>>> {
    let blocks = encode(plan, a, b)?;
    blocks
        .iter()
        .zip(&plan.assignments)
        .map(|(wb, tasks)| worker_compute(wb, tasks).map(|(r, _)| r))
        .collect()
}
