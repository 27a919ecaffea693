//! Small dense symmetric linear algebra.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Number of entries in the packed upper triangle of a `d × d` matrix.
#[inline]
pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Symmetric matrix stored as its row-major upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; packed_len(dim)] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds from packed upper-triangle storage.
    pub fn from_packed(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != packed_len(dim) {
            return Err(invalid(format!(
                "packed storage for d={dim} needs {} entries, got {}",
                packed_len(dim),
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// Builds from a row-major square array, reading only the upper triangle.
    pub fn from_upper(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(invalid("square storage has the wrong length"));
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, rows[i * dim + j]);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * (2 * self.dim - i + 1) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let idx = self.index(i, j);
        self.data[idx] = value;
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                sum += v * v;
            }
        }
        libm::sqrt(sum)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid("dense storage has the wrong length"));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymEigen {
    /// `V diag(φ(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, map: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|v| map(*v)).collect();
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let s = (0..d).map(|k| self.vectors.get(i, k) * mapped[k] * self.vectors.get(j, k)).sum();
                out.set(i, j, s);
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps until the off-diagonal Frobenius norm drops below `1e-12 ‖m‖_F`.
/// Equal eigenvalues keep their original diagonal order.
pub fn sym_eigen(m: &SymMatrix) -> Result<SymEigen> {
    let d = m.dim();
    if d == 0 {
        return Err(invalid("matrix dimension must be at least 1"));
    }
    if !m.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let mut a = m.to_dense();
    let mut v = DenseMatrix::identity(d);
    let threshold = JACOBI_REL_TOL * m.frobenius_norm();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (c, s) = rotation(a.get(p, p), a.get(q, q), apq);
                apply_rotation(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(Error::NumericalFailure(format!(
            "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = DenseMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..d {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if i != j {
                sum += a.get(i, j) * a.get(i, j);
            }
        }
    }
    libm::sqrt(sum)
}

/// `(cos, sin)` of the rotation annihilating `a_pq`.
fn rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    (c, t * c)
}

/// `A ← Jᵀ A J`, `V ← V J` for the rotation in the `(p, q)` plane.
fn apply_rotation(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let d = a.rows();
    for k in 0..d {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..d {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..d {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// Inverse symmetric square root `V diag(λ^{-1/2}) Vᵀ`.
///
/// Fails with [`Error::SingularCovariance`] when an eigenvalue is not above
/// `floor_ratio` times the largest one.
pub fn inv_sqrt(m: &SymMatrix, floor_ratio: f64) -> Result<SymMatrix> {
    let eig = sym_eigen(m)?;
    let largest = eig.values[0];
    for (index, &value) in eig.values.iter().enumerate() {
        if !(value > 0.0 && value > floor_ratio * largest) {
            return Err(Error::SingularCovariance { index, value });
        }
    }
    Ok(eig.reconstruct_with(|v| 1.0 / libm::sqrt(v)))
}

/// Sample mean and unbiased covariance of `rows` (each of length `dim`),
/// computed in two passes.
pub fn sample_covariance<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Result<(Vec<f64>, SymMatrix)> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if rows.len() < dim + 1 {
        return Err(Error::InsufficientData { needed: dim + 1, got: rows.len() });
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(invalid("row has the wrong dimension"));
        }
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = SymMatrix::zeros(dim);
    let mut centered = vec![0.0; dim];
    for row in rows {
        for ((c, x), m) in centered.iter_mut().zip(row.as_ref()).zip(&mean) {
            *c = x - m;
        }
        let packed = cov.packed_mut();
        let mut idx = 0;
        for i in 0..dim {
            for j in i..dim {
                packed[idx] += centered[i] * centered[j];
                idx += 1;
            }
        }
    }
    for v in cov.packed_mut() {
        *v /= n - 1.0;
    }
    Ok((mean, cov))
}
