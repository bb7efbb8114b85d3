use crate::error::{Error, Result};

/// Dense real square matrix, row-major storage.
///
/// Construction validates that every entry is finite; all downstream
/// numerics rely on that invariant. Dimensions start at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a `dim x dim` matrix from row-major entries.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != dim * dim {
            return Err(Error::EntryCount {
                dim,
                expected: dim * dim,
                got: data.len(),
            });
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: k / dim,
                    col: k % dim,
                    value: v,
                });
            }
        }
        Ok(Matrix { dim, data })
    }

    /// Builds a matrix from explicit rows, checking shape consistency.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected: dim,
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Matrix::new(dim, vec![0.0; dim * dim])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Matrix::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let mut m = Matrix::zeros(entries.len())?;
        for (i, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: i,
                    col: i,
                    value: v,
                });
            }
            m.set(i, i, v);
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    #[inline]
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    /// Matrix product `self * rhs`. Operands must share a dimension.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = self.data[i * d + k];
                if aik == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * d..(k + 1) * d];
                let out_row = &mut out[i * d..(i + 1) * d];
                for j in 0..d {
                    out_row[j] += aik * rhs_row[j];
                }
            }
        }
        Ok(Matrix { dim: d, data: out })
    }

    /// Matrix-vector product `self * x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        (0..d)
            .map(|i| {
                let row = &self.data[i * d..(i + 1) * d];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[j * d + i] = self.data[i * d + j];
            }
        }
        Matrix { dim: d, data: out }
    }

    /// Scalar multiple `c * self`. Errors if `c` is not finite.
    pub fn scale(&self, c: f64) -> Result<Matrix> {
        let data: Vec<f64> = self.data.iter().map(|&v| c * v).collect();
        Matrix::new(self.dim, data)
    }

    /// Gram matrix `self^T * self`. The result is exactly symmetric in
    /// floating point: entry (i, j) and entry (j, i) accumulate the same
    /// products in the same order.
    pub fn gram(&self) -> Matrix {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.data[k * d + i] * self.data[k * d + j];
                }
                out[i * d + j] = s;
                out[j * d + i] = s;
            }
        }
        Matrix { dim: d, data: out }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn det(&self) -> f64 {
        let d = self.dim;
        let mut lu = self.data.clone();
        let mut det = 1.0;
        for col in 0..d {
            let mut pivot = col;
            for r in col + 1..d {
                if lu[r * d + col].abs() > lu[pivot * d + col].abs() {
                    pivot = r;
                }
            }
            if lu[pivot * d + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..d {
                    lu.swap(col * d + j, pivot * d + j);
                }
                det = -det;
            }
            let p = lu[col * d + col];
            det *= p;
            for r in col + 1..d {
                let f = lu[r * d + col] / p;
                lu[r * d + col] = 0.0;
                for j in col + 1..d {
                    lu[r * d + j] -= f * lu[col * d + j];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    ///
    /// Declares the matrix singular when `|det| <= 1e-12 * ||self||_F^dim`,
    /// so the caller never receives an inverse built from a vanishing pivot.
    pub fn inverse(&self) -> Result<Matrix> {
        let d = self.dim;
        let det = self.det();
        let threshold = 1e-12 * self.frobenius_norm().powi(d as i32);
        if det.abs() <= threshold {
            return Err(Error::Singular {
                det: det.abs(),
                threshold,
            });
        }
        let mut a = self.data.clone();
        let mut inv = Matrix::identity(d)?.data;
        for col in 0..d {
            let mut pivot = col;
            for r in col + 1..d {
                if a[r * d + col].abs() > a[pivot * d + col].abs() {
                    pivot = r;
                }
            }
            if a[pivot * d + col] == 0.0 {
                return Err(Error::Singular {
                    det: 0.0,
                    threshold,
                });
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(col * d + j, pivot * d + j);
                    inv.swap(col * d + j, pivot * d + j);
                }
            }
            let p = a[col * d + col];
            for j in 0..d {
                a[col * d + j] /= p;
                inv[col * d + j] /= p;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[r * d + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    a[r * d + j] -= f * a[col * d + j];
                    inv[r * d + j] -= f * inv[col * d + j];
                }
            }
        }
        Matrix::new(d, inv)
    }
}

/// Conjugation `q * a * q^-1`. Errors if `q` is numerically singular.
pub fn similarity(q: &Matrix, a: &Matrix) -> Result<Matrix> {
    if q.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            left: q.dim(),
            right: a.dim(),
        });
    }
    let q_inv = q.inverse()?;
    q.mul(a)?.mul(&q_inv)
}

/// Entrywise comparison with a relative scale:
/// `max|a_ij - b_ij| <= tol * max(1, max|a|, max|b|)`.
pub fn approx_equal(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    let scale = 1.0_f64.max(a.max_abs()).max(b.max_abs());
    a.entries()
        .iter()
        .zip(b.entries())
        .all(|(x, y)| (x - y).abs() <= tol * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(rows: [[f64; 2]; 2]) -> Matrix {
        Matrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).unwrap()
    }

    #[test]
    fn construction_rejects_bad_shapes() {
        assert_eq!(Matrix::new(0, vec![]), Err(Error::ZeroDimension));
        assert!(matches!(
            Matrix::new(2, vec![1.0, 2.0, 3.0]),
            Err(Error::EntryCount { .. })
        ));
        assert!(matches!(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(Error::RaggedRow { row: 1, got: 1, expected: 2 })
        ));
    }

    #[test]
    fn construction_rejects_non_finite_entries() {
        let e = Matrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(e, Err(Error::NonFiniteEntry { row: 0, col: 1, .. })));
        let e = Matrix::new(1, vec![f64::INFINITY]);
        assert!(matches!(e, Err(Error::NonFiniteEntry { .. })));
    }

    #[test]
    fn product_matches_hand_computation() {
        let a = m2([[1.0, 2.0], [3.0, 4.0]]);
        let b = m2([[0.0, 1.0], [1.0, 0.0]]);
        let ab = a.mul(&b).unwrap();
        assert_eq!(ab, m2([[2.0, 1.0], [4.0, 3.0]]));
    }

    #[test]
    fn product_requires_matching_dimensions() {
        let a = m2([[1.0, 0.0], [0.0, 1.0]]);
        let b = Matrix::identity(3).unwrap();
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn transpose_involution() {
        let a = m2([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose(), m2([[1.0, 3.0], [2.0, 4.0]]));
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        let a = Matrix::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let g = a.gram();
        let expected = Matrix::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![1.0, 2.0, 3.0],
            vec![2.0, 3.0, 6.0],
        ])
        .unwrap();
        assert_eq!(g, expected);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn determinant_of_triangular_is_diagonal_product() {
        let a = Matrix::from_rows(&[
            vec![2.0, 5.0, -1.0],
            vec![0.0, 3.0, 7.0],
            vec![0.0, 0.0, -4.0],
        ])
        .unwrap();
        assert!((a.det() - (-24.0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let q = m2([[-0.5, 1.0], [0.0, 1.0]]);
        let qi = q.inverse().unwrap();
        assert_eq!(qi, m2([[-2.0, 2.0], [0.0, 1.0]]));
        let id = q.mul(&qi).unwrap();
        assert!(approx_equal(&id, &Matrix::identity(2).unwrap(), 1e-14));
    }

    #[test]
    fn inverse_rejects_singular() {
        let s = m2([[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(s.inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn similarity_conjugates() {
        // q diag(2, 1) conjugating a shear changes only the off-diagonal.
        let q = m2([[2.0, 0.0], [0.0, 1.0]]);
        let a = m2([[1.0, 1.0], [0.0, 1.0]]);
        let c = similarity(&q, &a).unwrap();
        assert!(approx_equal(&c, &m2([[1.0, 2.0], [0.0, 1.0]]), 1e-14));
    }

    #[test]
    fn approx_equal_uses_relative_scale() {
        let a = m2([[1e8, 0.0], [0.0, 1e8]]);
        let b = m2([[1e8 + 0.5, 0.0], [0.0, 1e8]]);
        // Absolute difference 0.5 sits inside 1e-8 relative at scale 1e8.
        assert!(approx_equal(&a, &b, 1e-8));
        assert!(!approx_equal(&a, &b, 1e-12));
    }

    #[test]
    fn apply_multiplies_vector() {
        let a = m2([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.apply(&[1.0, 1.0]), vec![3.0, 7.0]);
    }
}
