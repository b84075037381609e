//! Dense row-major `f64` matrices, block partitioning and the reference
//! product `AᵀB`.
//!
//! Everything coded in this crate is expressed over blocks produced by
//! [`partition`]: a `t × r` matrix split into a `p × q` grid of equal
//! `(t/p) × (r/q)` blocks, numbered row-major (`block (i, j)` has flat index
//! `i * q + j`).

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CcmError, Result};
use crate::rng;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = CcmError;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CcmError::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(CcmError::Dimension(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Build from row slices; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CcmError::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += alpha * s;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `‖self − reference‖_F / ‖reference‖_F` (absolute error if the reference is zero).
    pub fn relative_error(&self, reference: &Matrix) -> f64 {
        let diff = self.sub(reference).frobenius_norm();
        let norm = reference.frobenius_norm();
        if norm == 0.0 {
            diff
        } else {
            diff / norm
        }
    }

    /// Copy of rows `r0..r0+nr`, columns `c0..c0+nc`.
    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "submatrix out of range");
        Matrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Zero-pad to `rows × cols` (both at least the current size).
    pub fn padded(&self, rows: usize, cols: usize) -> Matrix {
        assert!(rows >= self.rows && cols >= self.cols, "padding cannot shrink");
        Matrix::from_fn(rows, cols, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)]
            } else {
                0.0
            }
        })
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Block grids
// ---------------------------------------------------------------------------

/// A `grid_rows × grid_cols` array of equally shaped blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrid {
    grid_rows: usize,
    grid_cols: usize,
    blocks: Vec<Matrix>,
}

impl BlockGrid {
    pub fn new(grid_rows: usize, grid_cols: usize, blocks: Vec<Matrix>) -> Result<Self> {
        if grid_rows == 0 || grid_cols == 0 || blocks.len() != grid_rows * grid_cols {
            return Err(CcmError::Dimension(format!(
                "grid {grid_rows}x{grid_cols} needs {} blocks, got {}",
                grid_rows * grid_cols,
                blocks.len()
            )));
        }
        let shape = blocks[0].shape();
        if let Some(bad) = blocks.iter().position(|b| b.shape() != shape) {
            return Err(CcmError::Dimension(format!(
                "block {bad} is {:?}, expected {:?}",
                blocks[bad].shape(),
                shape
            )));
        }
        Ok(Self {
            grid_rows,
            grid_cols,
            blocks,
        })
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    pub fn block(&self, i: usize, j: usize) -> &Matrix {
        &self.blocks[i * self.grid_cols + j]
    }

    pub fn block_shape(&self) -> (usize, usize) {
        self.blocks[0].shape()
    }

    /// Blocks in row-major grid order.
    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Matrix> {
        self.blocks
    }
}

/// Split `m` into a `p × q` grid of `(rows/p) × (cols/q)` blocks.
pub fn partition(m: &Matrix, p: usize, q: usize) -> Result<BlockGrid> {
    if p == 0 || !m.rows.is_multiple_of(p) {
        return Err(CcmError::Dimension(format!(
            "rows: {} not divisible into {p} block rows",
            m.rows
        )));
    }
    if q == 0 || !m.cols.is_multiple_of(q) {
        return Err(CcmError::Dimension(format!(
            "cols: {} not divisible into {q} block columns",
            m.cols
        )));
    }
    let (br, bc) = (m.rows / p, m.cols / q);
    let mut blocks = Vec::with_capacity(p * q);
    for i in 0..p {
        for j in 0..q {
            blocks.push(m.submatrix(i * br, j * bc, br, bc));
        }
    }
    BlockGrid::new(p, q, blocks)
}

/// Inverse of [`partition`].
pub fn assemble(g: &BlockGrid) -> Result<Matrix> {
    let (br, bc) = g.block_shape();
    if g.blocks.iter().any(|b| b.shape() != (br, bc)) {
        return Err(CcmError::Dimension("ragged blocks".into()));
    }
    let mut out = Matrix::zeros(g.grid_rows * br, g.grid_cols * bc);
    for gi in 0..g.grid_rows {
        for gj in 0..g.grid_cols {
            let b = g.block(gi, gj);
            for i in 0..br {
                let dst = (gi * br + i) * out.cols + gj * bc;
                out.data[dst..dst + bc].copy_from_slice(b.row(i));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

/// Floating-point operation count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct FlopCount(pub u64);

impl FlopCount {
    /// Exact count for `AᵀB` with `A: t×r`, `B: t×w`: `r·w·(2t − 1)`.
    pub fn transpose_product(r: usize, t: usize, w: usize) -> FlopCount {
        FlopCount(r as u64 * w as u64 * (2 * t as u64 - 1))
    }
}

/// `AᵀB` with the exact flop count. Entries are accumulated in increasing
/// shared-index order.
pub fn direct_product(a: &Matrix, b: &Matrix) -> Result<(Matrix, FlopCount)> {
    if a.rows != b.rows {
        return Err(CcmError::Dimension(format!(
            "AᵀB needs equal row counts, got {} and {}",
            a.rows, b.rows
        )));
    }
    let at = a.transpose();
    let bt = b.transpose();
    let t = a.rows;
    let out = Matrix::from_fn(a.cols, b.cols, |i, j| {
        let (x, y) = (&at.data[i * t..(i + 1) * t], &bt.data[j * t..(j + 1) * t]);
        let mut acc = 0.0;
        for k in 0..t {
            acc += x[k] * y[k];
        }
        acc
    });
    Ok((out, FlopCount::transpose_product(a.cols, t, b.cols)))
}

// ---------------------------------------------------------------------------
// Random matrices
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntryDistribution {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl EntryDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EntryDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite()) || high < low {
                    return Err(CcmError::Config(format!("uniform({low}, {high}) is invalid")));
                }
            }
            EntryDistribution::Gaussian { mean, std } => {
                if !(mean.is_finite() && std.is_finite()) || std < 0.0 {
                    return Err(CcmError::Config(format!("gaussian({mean}, {std}) is invalid")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn sample_n<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match *self {
            EntryDistribution::Uniform { low, high } if low == high => vec![low; n],
            EntryDistribution::Uniform { low, high } => (0..n).map(|_| rng.random_range(low..high)).collect(),
            EntryDistribution::Gaussian { mean, std } => {
                let normal = Normal::new(mean, std).map_err(|e| CcmError::Config(format!("gaussian: {e}")))?;
                (0..n).map(|_| normal.sample(rng)).collect()
            }
        })
    }
}

/// Deterministic random matrix: entries drawn i.i.d. from `dist` using the
/// root generator of `seed`, in row-major order.
pub fn random_matrix(rows: usize, cols: usize, seed: u64, dist: EntryDistribution) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(CcmError::Dimension(format!("{rows}x{cols} is empty")));
    }
    let mut rng = rng::seeded(seed);
    Matrix::new(rows, cols, dist.sample_n(&mut rng, rows * cols)?)
}
