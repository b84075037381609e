//! Interpolation in the monomial basis.
//!
//! Both interpolants are linear in the samples, so each is computed once as a
//! scalar transform `T` (coefficient `k` = `Σ_s T[k][s] · sample_s`) and then
//! applied to matrix-valued samples entrywise.

use crate::error::{CcmError, Result};
use crate::matrix::Matrix;

fn check_distinct(points: &[f64]) -> Result<()> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let distinct = sorted.windows(2).filter(|w| w[0] != w[1]).count() + 1;
    if distinct < points.len() {
        return Err(CcmError::Singular {
            rank: distinct,
            needed: points.len(),
        });
    }
    Ok(())
}

/// Monomial coefficients of `Π_j (z − points[j])`, lowest degree first.
fn master_poly(points: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &p in points {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= p * ck;
        }
        c = next;
    }
    c
}

/// Transform from samples at distinct `points` to monomial coefficients,
/// built from barycentric weights `w_i = 1 / Π_{j≠i} (z_i − z_j)`.
pub fn lagrange_transform(points: &[f64]) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(CcmError::Underdetermined { have: 0, needed: 1 });
    }
    check_distinct(points)?;
    let n = points.len();
    let master = master_poly(points);
    let mut t = vec![vec![0.0; n]; n];
    for (i, &zi) in points.iter().enumerate() {
        let w: f64 = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &zj)| 1.0 / (zi - zj))
            .product();
        // Synthetic division of the master polynomial by (z − z_i).
        let mut q = vec![0.0; n];
        let mut carry = 0.0;
        for k in (0..n).rev() {
            carry = master[k + 1] + carry * zi;
            q[k] = carry;
        }
        for k in 0..n {
            t[k][i] = w * q[k];
        }
    }
    Ok(t)
}

/// A Hermite node: value and derivatives up to order `multiplicity − 1` are
/// known at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteNode {
    pub z: f64,
    pub multiplicity: usize,
}

/// Transform from Hermite samples (node by node, derivative orders ascending,
/// ordinary derivatives) to monomial coefficients of the degree `Σk − 1`
/// interpolant, via generalized divided differences.
pub fn hermite_transform(nodes: &[HermiteNode]) -> Result<Vec<Vec<f64>>> {
    let zs: Vec<f64> = nodes.iter().map(|n| n.z).collect();
    check_distinct(&zs)?;
    let mut seq = Vec::new();
    let mut order = Vec::new();
    for node in nodes {
        for l in 0..node.multiplicity {
            seq.push(node.z);
            order.push(l);
        }
    }
    let len = seq.len();
    if len == 0 {
        return Err(CcmError::Underdetermined { have: 0, needed: 1 });
    }
    // First sample index of each entry in `seq`'s node.
    let base: Vec<usize> = (0..len).map(|i| i - order[i]).collect();
    let mut factorial = vec![1.0; len];
    for j in 1..len {
        factorial[j] = factorial[j - 1] * j as f64;
    }
    let mut t = vec![vec![0.0; len]; len];
    for s in 0..len {
        // Divided differences with sample s set to one and the rest zero.
        let sample = |i: usize| if i == s { 1.0 } else { 0.0 };
        let mut col: Vec<f64> = (0..len).map(|i| sample(base[i])).collect();
        let mut newton = vec![col[0]];
        for j in 1..len {
            let mut next = vec![0.0; len - j];
            for i in 0..len - j {
                next[i] = if seq[i] == seq[i + j] {
                    sample(base[i] + j) / factorial[j]
                } else {
                    (col[i + 1] - col[i]) / (seq[i + j] - seq[i])
                };
            }
            newton.push(next[0]);
            col = next;
        }
        // Newton form to monomial form by Horner's rule.
        let mut poly = vec![newton[len - 1]];
        for j in (0..len - 1).rev() {
            let mut next = vec![0.0; poly.len() + 1];
            for (k, &c) in poly.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= seq[j] * c;
            }
            next[0] += newton[j];
            poly = next;
        }
        for k in 0..len {
            t[k][s] = poly[k];
        }
    }
    Ok(t)
}

pub(crate) fn apply_transform(t: &[Vec<f64>], samples: &[&Matrix]) -> Vec<Matrix> {
    let (r, c) = samples[0].shape();
    t.iter()
        .map(|row| {
            let mut acc = Matrix::zeros(r, c);
            for (&w, s) in row.iter().zip(samples) {
                if w != 0.0 {
                    acc.axpy(w, s);
                }
            }
            acc
        })
        .collect()
}

fn check_shapes(values: &[&Matrix]) -> Result<()> {
    let shape = values[0].shape();
    if values.iter().any(|v| v.shape() != shape) {
        return Err(CcmError::Dimension("samples have different shapes".into()));
    }
    Ok(())
}

/// Coefficients (lowest degree first) of the unique polynomial of degree
/// `points.len() − 1` through the matrix samples.
pub fn interpolate(points: &[f64], values: &[&Matrix]) -> Result<Vec<Matrix>> {
    if points.len() != values.len() {
        return Err(CcmError::Dimension(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let t = lagrange_transform(points)?;
    check_shapes(values)?;
    Ok(apply_transform(&t, values))
}

/// Coefficients of the degree-`degree` polynomial matching values and
/// derivatives at the nodes; `samples` are ordered node by node with
/// derivative orders ascending.
pub fn hermite_interpolate(nodes: &[HermiteNode], samples: &[&Matrix], degree: usize) -> Result<Vec<Matrix>> {
    let total: usize = nodes.iter().map(|n| n.multiplicity).sum();
    if total < degree + 1 {
        return Err(CcmError::Underdetermined {
            have: total,
            needed: degree + 1,
        });
    }
    if total > degree + 1 {
        return Err(CcmError::Dimension(format!(
            "{total} conditions for a degree-{degree} polynomial; expected {}",
            degree + 1
        )));
    }
    if samples.len() != total {
        return Err(CcmError::Dimension(format!(
            "{} samples for {total} conditions",
            samples.len()
        )));
    }
    let t = hermite_transform(nodes)?;
    check_shapes(samples)?;
    Ok(apply_transform(&t, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::new(1, 1, vec![v]).unwrap()
    }

    fn coeffs(ms: &[Matrix]) -> Vec<f64> {
        ms.iter().map(|m| m[(0, 0)]).collect()
    }

    #[test]
    fn single_sample() {
        let v = scalar(4.0);
        assert_eq!(coeffs(&interpolate(&[0.3], &[&v]).unwrap()), vec![4.0]);
    }

    #[test]
    fn quadratic_through_three_points() {
        let u = |z: f64| 1.0 + 2.0 * z + 3.0 * z * z;
        let vals: Vec<Matrix> = [-1.0, 0.0, 1.0].iter().map(|&z| scalar(u(z))).collect();
        let refs: Vec<&Matrix> = vals.iter().collect();
        let c = coeffs(&interpolate(&[-1.0, 0.0, 1.0], &refs).unwrap());
        for (got, want) in c.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicate_points_are_singular() {
        let v = scalar(1.0);
        let err = interpolate(&[0.5, 0.5], &[&v, &v]).unwrap_err();
        assert!(matches!(err, CcmError::Singular { rank: 1, needed: 2 }));
    }

    #[test]
    fn hermite_recovers_cubic() {
        // u = z³ with u(0)=0, u'(0)=0, u(1)=1, u'(1)=3.
        let s: Vec<Matrix> = [0.0, 0.0, 1.0, 3.0].iter().map(|&v| scalar(v)).collect();
        let refs: Vec<&Matrix> = s.iter().collect();
        let nodes = [
            HermiteNode {
                z: 0.0,
                multiplicity: 2,
            },
            HermiteNode {
                z: 1.0,
                multiplicity: 2,
            },
        ];
        let c = coeffs(&hermite_interpolate(&nodes, &refs, 3).unwrap());
        for (got, want) in c.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14, "{c:?}");
        }
    }

    #[test]
    fn hermite_underdetermined() {
        let v = scalar(1.0);
        let nodes = [HermiteNode {
            z: 0.0,
            multiplicity: 1,
        }];
        assert!(matches!(
            hermite_interpolate(&nodes, &[&v], 2),
            Err(CcmError::Underdetermined { have: 1, needed: 3 })
        ));
    }

    #[test]
    fn hermite_with_unit_multiplicities_is_lagrange() {
        let pts = [-0.9, -0.2, 0.4, 0.7];
        let nodes: Vec<HermiteNode> = pts.iter().map(|&z| HermiteNode { z, multiplicity: 1 }).collect();
        let a = lagrange_transform(&pts).unwrap();
        let b = hermite_transform(&nodes).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
