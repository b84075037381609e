//! Small finite-field helpers used to build binary and ternary encodings.
//!
//! An element of GF(q^k) is represented by a `k × k` matrix over GF(q): the
//! primitive element α maps to the companion matrix `C` of a primitive
//! polynomial, and α^e to `C^e`. Only the integer matrices leave this module;
//! all payload arithmetic stays over the reals.

use crate::error::{CcmError, Result};

/// Square integer matrix with entries reduced mod `q`.
pub type IntMatrix = Vec<Vec<u64>>;

/// Low-order coefficients `(c_0, …, c_{k−1})` with `x^k = Σ c_i x^i (mod q)`
/// for the configured primitive polynomial of GF(q^k).
pub fn primitive_poly(q: u64, k: usize) -> Option<Vec<u64>> {
    let c: &[u64] = match (q, k) {
        (2, 1) => &[1],
        (2, 2) => &[1, 1],       // x^2 + x + 1
        (2, 3) => &[1, 1, 0],    // x^3 + x + 1
        (2, 4) => &[1, 1, 0, 0], // x^4 + x + 1
        (2, 5) => &[1, 0, 1, 0, 0],
        (3, 1) => &[2],
        (3, 2) => &[1, 1],    // x^2 + 2x + 2
        (3, 3) => &[2, 1, 0], // x^3 + 2x + 1
        _ => return None,
    };
    Some(c.to_vec())
}

/// Matrix representation of GF(q^k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldRep {
    pub q: u64,
    pub k: usize,
    pub companion: IntMatrix,
}

impl FieldRep {
    pub fn new(q: u64, k: usize) -> Result<Self> {
        let c = primitive_poly(q, k)
            .ok_or_else(|| CcmError::Config(format!("no primitive polynomial configured for GF({q}^{k})")))?;
        let mut companion = vec![vec![0u64; k]; k];
        for i in 1..k {
            companion[i][i - 1] = 1;
        }
        for (i, ci) in c.into_iter().enumerate() {
            companion[i][k - 1] = ci;
        }
        Ok(Self { q, k, companion })
    }

    /// Multiplicative order of α, i.e. the number of distinct nonzero elements.
    pub fn order(&self) -> u64 {
        self.q.pow(self.k as u32) - 1
    }

    pub fn identity(&self) -> IntMatrix {
        (0..self.k)
            .map(|i| (0..self.k).map(|j| u64::from(i == j)).collect())
            .collect()
    }

    pub fn mul(&self, a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
        let k = self.k;
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum::<u64>() % self.q)
                    .collect()
            })
            .collect()
    }

    /// `C^e mod q`.
    pub fn alpha_pow(&self, e: u64) -> IntMatrix {
        let mut e = e % self.order();
        let mut base = self.companion.clone();
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, a: &IntMatrix, s: u64) -> IntMatrix {
        a.iter()
            .map(|row| row.iter().map(|v| v * (s % self.q) % self.q).collect())
            .collect()
    }
}

/// Binomial coefficient C(n, r); zero when r > n.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exact integer determinant by fraction-free (Bareiss) elimination.
pub fn bareiss_det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
