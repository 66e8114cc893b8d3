//! Column-major dense complex matrices and the vector kernels everything
//! else is built from. Kept deliberately small: the crate needs products,
//! adjoints, norms, and Gram-Schmidt, not a general linear algebra library.

use num_complex::Complex64;
use rayon::prelude::*;

pub type C64 = Complex64;

/// Dense complex matrix, column-major storage (LAPACK layout).
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CMatrix({}x{})", self.rows, self.cols)
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        assert!(!cols.is_empty());
        let rows = cols[0].len();
        let mut m = CMatrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            m.col_mut(j).copy_from_slice(c);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk.re == 0.0 && xk.im == 0.0 {
                continue;
            }
            let a = self.col(k);
            for i in 0..self.rows {
                y[i] += a[i] * xk;
            }
        }
        y
    }

    /// y = A* x (conjugate transpose applied to x).
    pub fn matvec_adj(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|k| {
                let a = self.col(k);
                let mut s = C64::new(0.0, 0.0);
                for i in 0..self.rows {
                    s += a[i].conj() * x[i];
                }
                s
            })
            .collect()
    }

    /// C = A B, parallel over output columns. Each column is accumulated
    /// independently so the result is bit-identical for any thread count.
    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul dims: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let rows = self.rows;
        let mut out = CMatrix::zeros(rows, rhs.cols);
        out.data
            .par_chunks_mut(rows)
            .enumerate()
            .for_each(|(j, cj)| {
                let bj = rhs.col(j);
                for (k, &b) in bj.iter().enumerate() {
                    if b.re == 0.0 && b.im == 0.0 {
                        continue;
                    }
                    let ak = self.col(k);
                    for i in 0..rows {
                        cj[i] += ak[i] * b;
                    }
                }
            });
        out
    }

    /// A* (conjugate transpose).
    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.data[i * self.cols + j] = self.data[j * self.rows + i].conj();
            }
        }
        out
    }

    pub fn scaled(&self, s: C64) -> CMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &CMatrix) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
    }

    /// Subtracts the identity in place (square only).
    pub fn sub_identity(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            self.data[i * self.rows + i] -= C64::new(1.0, 0.0);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// <x, y> with the convention of conjugating the first argument.
pub fn vdot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = C64::new(0.0, 0.0);
    for i in 0..x.len() {
        s += x[i].conj() * y[i];
    }
    s
}

pub fn vnorm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn vnorm(x: &[C64]) -> f64 {
    vnorm_sqr(x).sqrt()
}

pub fn vscale(x: &mut [C64], s: f64) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// In-place modified Gram-Schmidt over the columns of `m`, in column order.
/// Returns the smallest renormalization factor seen; values near zero mean
/// two input columns were nearly parallel and a second pass is advisable.
pub fn gram_schmidt(m: &mut CMatrix) -> f64 {
    let rows = m.rows;
    let cols = m.cols;
    let mut min_renorm = f64::INFINITY;
    for j in 0..cols {
        // Project out the already-orthonormalized columns one at a time.
        for k in 0..j {
            let coef = {
                let (head, tail) = m.data.split_at(j * rows);
                let vk = &head[k * rows..(k + 1) * rows];
                let vj = &tail[..rows];
                vdot(vk, vj)
            };
            let (head, tail) = m.data.split_at_mut(j * rows);
            let vk = &head[k * rows..(k + 1) * rows];
            let vj = &mut tail[..rows];
            for i in 0..rows {
                vj[i] -= coef * vk[i];
            }
        }
        let vj = m.col_mut(j);
        let n = vnorm(vj);
        min_renorm = min_renorm.min(n);
        if n > 0.0 {
            vscale(vj, 1.0 / n);
        }
    }
    min_renorm
}
