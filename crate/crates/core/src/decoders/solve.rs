use crate::error::{CcmError, Result};
use crate::linalg;
use crate::matrix::Matrix;

fn check_rhs(m: &Matrix, rhs: &Matrix) -> Result<()> {
    if m.rows() != rhs.rows() {
        return Err(CcmError::Dimension(format!(
            "system has {} rows, right-hand side {}",
            m.rows(),
            rhs.rows()
        )));
    }
    Ok(())
}

fn check_full_rank(m: &Matrix) -> Result<()> {
    if m.rows() < m.cols() {
        return Err(CcmError::Underdetermined {
            have: m.rows(),
            needed: m.cols(),
        });
    }
    let rank = linalg::rank(m);
    if rank < m.cols() {
        return Err(CcmError::Singular { rank, needed: m.cols() });
    }
    Ok(())
}

/// Solve `M X = Y` for square or tall full-column-rank `M` by Gaussian
/// elimination with partial pivoting. For tall systems the pivot rows are
/// chosen greedily and the remaining equations are assumed consistent.
pub fn solve_dense_matrix(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    check_rhs(m, rhs)?;
    check_full_rank(m)?;
    let (rows, n) = m.shape();
    let k = rhs.cols();
    let mut a: Vec<Vec<f64>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    let mut b: Vec<Vec<f64>> = (0..rows).map(|i| rhs.row(i).to_vec()).collect();
    for col in 0..n {
        let piv = (col..rows)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()).then(y.cmp(&x)))
            .unwrap();
        if a[piv][col] == 0.0 {
            return Err(CcmError::Singular { rank: col, needed: n });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, bottom) = a.split_at_mut(col + 1);
        let (btop, bbottom) = b.split_at_mut(col + 1);
        let prow = &top[col];
        let pb = &btop[col];
        for (ar, br) in bottom.iter_mut().zip(bbottom.iter_mut()) {
            let f = ar[col] / prow[col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                ar[j] -= f * prow[j];
            }
            for j in 0..k {
                br[j] -= f * pb[j];
            }
        }
    }
    let mut x = Matrix::zeros(n, k);
    for i in (0..n).rev() {
        for j in 0..k {
            let mut acc = b[i][j];
            for l in i + 1..n {
                acc -= a[i][l] * x[(l, j)];
            }
            x[(i, j)] = acc / a[i][i];
        }
    }
    Ok(x)
}

/// Minimum-residual solution of `M X ≈ Y` for full-column-rank `M` (SVD).
pub fn solve_least_squares_matrix(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    check_rhs(m, rhs)?;
    check_full_rank(m)?;
    let svd = m.to_nalgebra().svd(true, true);
    let x = svd
        .solve(&rhs.to_nalgebra(), 0.0)
        .map_err(|e| CcmError::Domain(e.to_string()))?;
    Ok(Matrix::from_nalgebra(&x))
}

/// Stack matrix observations as rows of one right-hand side.
pub(crate) fn stack(values: &[&Matrix]) -> Result<Matrix> {
    let shape = values
        .first()
        .map(|v| v.shape())
        .ok_or(CcmError::Underdetermined { have: 0, needed: 1 })?;
    if values.iter().any(|v| v.shape() != shape) {
        return Err(CcmError::Dimension("observations have different shapes".into()));
    }
    let width = shape.0 * shape.1;
    let data: Vec<f64> = values.iter().flat_map(|v| v.data().iter().copied()).collect();
    Matrix::new(values.len(), width, data)
}

pub(crate) fn unstack(x: &Matrix, shape: (usize, usize)) -> Vec<Matrix> {
    (0..x.rows())
        .map(|i| Matrix::new(shape.0, shape.1, x.row(i).to_vec()).expect("shape checked"))
        .collect()
}
