//! Dense complex linear algebra sized for few-level quantum systems.
//!
//! Everything is written for small dimensions (N of order ten): row-major
//! storage, no blocking, no allocation tricks. The eigensolvers live in
//! [`eig`] (general matrices) and [`hermitian`] (Jacobi diagonalization and
//! the principal square root).

mod eig;
mod hermitian;

pub use eig::{eig_general, Eigensystem};
pub use hermitian::{eig_hermitian, hermitian_sqrt, hermitian_sqrt_with, polar_unitary};

use num_complex::Complex64;

use crate::error::PtError;
use crate::Result;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data; entries must be finite.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(PtError::ShapeMismatch {
                context: "matrix dimension must be at least 1".into(),
            });
        }
        if data.len() != dim * dim {
            return Err(PtError::ShapeMismatch {
                context: format!("expected {} entries, got {}", dim * dim, data.len()),
            });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(PtError::NonFinite {
                context: "matrix construction".into(),
            });
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// Builds from nested rows (convenience for literals in tests and models).
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(PtError::ShapeMismatch {
                    context: format!("row of length {} in a {}x{} matrix", row.len(), dim, dim),
                });
            }
            data.extend_from_slice(row);
        }
        ComplexMatrix::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim, v.dim(), "matvec dimension mismatch");
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        ComplexVector::from_vec(out)
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Hermiticity residual `|M - M^dag|_F / |M|_F` (zero for the zero matrix).
    pub fn hermiticity_residual(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        self.sub(&self.adjoint()).frobenius_norm() / norm
    }

    /// Gauss-Jordan inverse with partial pivoting.
    ///
    /// Refuses matrices whose condition estimate `|A|_F |A^-1|_F` exceeds
    /// `condition_max`.
    pub fn inverse_with(&self, condition_max: f64) -> Result<ComplexMatrix> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = ComplexMatrix::identity(n);
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = a.get(col, col).norm();
            for r in (col + 1)..n {
                let mag = a.get(r, col).norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag == 0.0 || !pivot_mag.is_finite() {
                return Err(PtError::SingularMatrix {
                    condition: f64::INFINITY,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    let (x, y) = (a.get(col, j), a.get(pivot_row, j));
                    a.set(col, j, y);
                    a.set(pivot_row, j, x);
                    let (x, y) = (inv.get(col, j), inv.get(pivot_row, j));
                    inv.set(col, j, y);
                    inv.set(pivot_row, j, x);
                }
            }
            let pivot = a.get(col, col);
            for j in 0..n {
                a.set(col, j, a.get(col, j) / pivot);
                inv.set(col, j, inv.get(col, j) / pivot);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col);
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let va = a.get(r, j) - factor * a.get(col, j);
                    a.set(r, j, va);
                    let vi = inv.get(r, j) - factor * inv.get(col, j);
                    inv.set(r, j, vi);
                }
            }
        }
        let condition = self.frobenius_norm() * inv.frobenius_norm();
        if !condition.is_finite() || condition > condition_max {
            return Err(PtError::SingularMatrix { condition });
        }
        Ok(inv)
    }

    /// Inverse with the default condition bound of 1e12.
    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.inverse_with(1e12)
    }

    /// Outer product `|u><v|` (second argument enters conjugated).
    pub fn outer(u: &ComplexVector, v: &ComplexVector) -> ComplexMatrix {
        assert_eq!(u.dim(), v.dim(), "outer dimension mismatch");
        let n = u.dim();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, u[i] * v[j].conj());
            }
        }
        out
    }

    pub fn column(&self, col: usize) -> ComplexVector {
        let data = (0..self.dim).map(|r| self.get(r, col)).collect();
        ComplexVector::from_vec(data)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

impl ComplexVector {
    pub fn from_vec(data: Vec<Complex64>) -> Self {
        ComplexVector { data }
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector {
            data: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Standard basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = ComplexVector::zeros(dim);
        v.data[k] = Complex64::new(1.0, 0.0);
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> ComplexVector {
        ComplexVector {
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "add dimension mismatch");
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), rhs.dim(), "sub dimension mismatch");
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn normalized(&self) -> ComplexVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    /// Index of the entry with the largest magnitude (first on ties).
    pub fn argmax_magnitude(&self) -> usize {
        let mut best = 0;
        let mut best_mag = self.data[0].norm_sqr();
        for (i, z) in self.data.iter().enumerate().skip(1) {
            let mag = z.norm_sqr();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        best
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, index: usize) -> &Complex64 {
        &self.data[index]
    }
}

impl std::ops::IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, index: usize) -> &mut Complex64 {
        &mut self.data[index]
    }
}

/// Inner product, conjugate-linear in the first argument.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Complex64 {
    assert_eq!(u.dim(), v.dim(), "inner dimension mismatch");
    u.data()
        .iter()
        .zip(v.data())
        .map(|(a, b)| a.conj() * b)
        .sum()
}
