//! Small dense linear algebra for dimensions 2..=8: vector helpers over
//! slices, square matrices in row-major storage, Gram-Schmidt basis
//! completion and a one-sided Jacobi SVD. No external solver is used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    scaled(a, 1.0 / n)
}

/// Square matrix, row-major. Serialized as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Ok(Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Diagonal matrix with -1 in position `axis`, +1 elsewhere.
    pub fn reflection(n: usize, axis: usize) -> Self {
        let mut m = Self::identity(n);
        m.set(axis, axis, -1.0);
        m
    }

    /// Permutation matrix swapping coordinates `i` and `j`.
    pub fn swap(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::identity(n);
        m.set(i, i, 0.0);
        m.set(j, j, 0.0);
        m.set(i, j, 1.0);
        m.set(j, i, 1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let mut out = Matrix::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..self.n {
                    out.set(i, j, out.get(i, j) + a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len());
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// Signed determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut sign = 1.0;
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in (col + 1)..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                sign = -sign;
            }
            let d = a[col * n + col];
            det *= d;
            for r in (col + 1)..n {
                let f = a[r * n + col] / d;
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
            }
        }
        sign * det
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let prod = self.transpose().matmul(self);
        for i in 0..self.n {
            for j in 0..self.n {
                let want = if i == j { 1.0 } else { 0.0 };
                if (prod.get(i, j) - want).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        (0..m.n).map(|i| m.row(i).to_vec()).collect()
    }
}

/// Orthonormalize `seeds` (assumed independent) and complete them to a
/// full orthonormal basis of R^n using standard basis vectors. The
/// completion is deterministic: candidate axes are tried in index order
/// and near-dependent ones skipped.
pub fn gram_schmidt_complete(seeds: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let push_orthogonal = |basis: &mut Vec<Vec<f64>>, v: &[f64]| -> bool {
        let mut w = v.to_vec();
        for b in basis.iter() {
            let c = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        let m = norm(&w);
        if m > 1e-9 {
            basis.push(scaled(&w, 1.0 / m));
            true
        } else {
            false
        }
    };
    for s in seeds {
        let ok = push_orthogonal(&mut basis, s);
        assert!(ok, "gram_schmidt_complete: dependent seed vectors");
    }
    let mut axis = 0;
    while basis.len() < n {
        assert!(axis < n, "gram_schmidt_complete: could not complete basis");
        let mut e = vec![0.0; n];
        e[axis] = 1.0;
        push_orthogonal(&mut basis, &e);
        axis += 1;
    }
    basis
}

/// Singular values of a square matrix by one-sided Jacobi iteration,
/// sorted in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let n = m.dim();
    // Work on columns of A: rotate pairs until all columns are orthogonal.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).collect()).collect();
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (ci, cj) = (cols[i].clone(), cols[j].clone());
                let alpha = dot(&ci, &ci);
                let beta = dot(&cj, &cj);
                let gamma = dot(&ci, &cj);
                let denom = (alpha * beta).sqrt();
                if denom > 0.0 {
                    off = off.max(gamma.abs() / denom);
                }
                if gamma.abs() <= 1e-15 * denom {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let a = ci[k];
                    let b = cj[k];
                    cols[i][k] = c * a - s * b;
                    cols[j][k] = s * a + c * b;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_orthogonality() {
        let r = Matrix::from_rows(vec![
            vec![0.6, -0.8, 0.0],
            vec![0.8, 0.6, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!((r.det() - 1.0).abs() < 1e-12);
        assert!(r.is_orthogonal(1e-12));
        let refl = Matrix::reflection(3, 1);
        assert!((refl.det() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_svd_matches_known_values() {
        // diag(3, 2, 0.5) rotated on both sides stays {3, 2, 0.5}.
        let d = Matrix::from_rows(vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 0.5],
        ])
        .unwrap();
        let r = Matrix::from_rows(vec![
            vec![0.36, -0.8, 0.48],
            vec![0.8, 0.6, 0.0],
            vec![-0.48, 0.384, 0.8768],
        ])
        .unwrap();
        // Orthonormalize r's rows first to make a true rotation.
        let basis = gram_schmidt_complete(&[r.row(0).to_vec(), r.row(1).to_vec()], 3);
        let q = Matrix::from_rows(basis).unwrap();
        let a = q.transpose().matmul(&d).matmul(&q);
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-10);
        assert!((sv[1] - 2.0).abs() < 1e-10);
        assert!((sv[2] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn gram_schmidt_completes_to_orthonormal_basis() {
        let seeds = vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0]];
        let basis = gram_schmidt_complete(&seeds, 4);
        assert_eq!(basis.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&basis[i], &basis[j]) - want).abs() < 1e-12);
            }
        }
    }
}
