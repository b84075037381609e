use std::collections::BTreeSet;

use crate::error::{CcmError, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct PeelOutput {
    pub x: Matrix,
    /// Unknowns in the order they were resolved.
    pub order: Vec<usize>,
    /// Equation used to resolve each entry of `order`.
    pub equations: Vec<usize>,
}

/// Solve `M X = Y` by repeatedly taking the lowest-numbered equation with a
/// single unresolved unknown and substituting the result everywhere.
pub fn peel_matrix(m: &Matrix, rhs: &Matrix) -> Result<PeelOutput> {
    if m.rows() != rhs.rows() {
        return Err(CcmError::Dimension("system and right-hand side differ in rows".into()));
    }
    let (rows, n) = m.shape();
    let k = rhs.cols();
    let mut open: Vec<BTreeSet<usize>> = (0..rows)
        .map(|i| (0..n).filter(|&j| m[(i, j)] != 0.0).collect())
        .collect();
    let mut y: Vec<Vec<f64>> = (0..rows).map(|i| rhs.row(i).to_vec()).collect();
    let mut x = Matrix::zeros(n, k);
    let mut order = Vec::with_capacity(n);
    let mut equations = Vec::with_capacity(n);
    while order.len() < n {
        let Some(eq) = (0..rows).find(|&i| open[i].len() == 1) else {
            return Err(CcmError::Stuck {
                resolved: order.len(),
                unknowns: n,
            });
        };
        let u = *open[eq].iter().next().unwrap();
        let c = m[(eq, u)];
        for j in 0..k {
            x[(u, j)] = y[eq][j] / c;
        }
        for i in 0..rows {
            if open[i].remove(&u) {
                let a = m[(i, u)];
                for j in 0..k {
                    y[i][j] -= a * x[(u, j)];
                }
            }
        }
        order.push(u);
        equations.push(eq);
    }
    Ok(PeelOutput { x, order, equations })
}

/// Symbolic peeling over a growing stream of equations; tracks only which
/// unknowns are resolved.
#[derive(Clone, Debug)]
pub struct PeelTracker {
    resolved: Vec<bool>,
    count: usize,
    /// Unresolved support of each stored equation.
    pending: Vec<BTreeSet<usize>>,
    /// Equations mentioning each unknown.
    by_unknown: Vec<Vec<usize>>,
}

impl PeelTracker {
    pub fn new(unknowns: usize) -> Self {
        Self {
            resolved: vec![false; unknowns],
            count: 0,
            pending: Vec::new(),
            by_unknown: vec![Vec::new(); unknowns],
        }
    }

    pub fn resolved(&self) -> usize {
        self.count
    }

    pub fn is_complete(&self) -> bool {
        self.count == self.resolved.len()
    }

    /// Add an equation given by the unknowns it involves; returns the number
    /// of unknowns resolved so far.
    pub fn push(&mut self, support: impl IntoIterator<Item = usize>) -> usize {
        let set: BTreeSet<usize> = support.into_iter().filter(|&u| !self.resolved[u]).collect();
        let id = self.pending.len();
        for &u in &set {
            self.by_unknown[u].push(id);
        }
        self.pending.push(set);
        let mut ripple = vec![id];
        while let Some(eq) = ripple.pop() {
            if self.pending[eq].len() != 1 {
                continue;
            }
            let u = *self.pending[eq].iter().next().unwrap();
            self.resolved[u] = true;
            self.count += 1;
            for e in std::mem::take(&mut self.by_unknown[u]) {
                if self.pending[e].remove(&u) && self.pending[e].len() == 1 {
                    ripple.push(e);
                }
            }
        }
        self.count
    }
}
