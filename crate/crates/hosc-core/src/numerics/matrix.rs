//! Row-major dense `f64` matrix.
//!
//! The public API treats matrices as immutable values: every constructor and
//! operation validates shapes and rejects non-finite entries, so a `Matrix`
//! obtained through public calls always holds finite data. The crate-internal
//! gemm helpers skip the finiteness scan; the training loop re-checks at the
//! loss boundary instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Row count above which gemm is split into parallel row blocks. The block
/// size is fixed so results do not depend on the number of worker threads.
const PAR_ROW_BLOCK: usize = 2048;
/// Reduction block (rows) for transposed-left products; fixed for determinism.
const PAR_K_BLOCK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DataLength { rows, cols, len: data.len() });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(NumericsError::NonFinite { context: "Matrix::new" });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Fills entry `(i, j)` with `f(i, j)`. The closure must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Standard matrix product. Fails on inner-dimension mismatch and on
    /// non-finite output entries.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let out = gemm_nn(self, other);
        if !out.data.iter().all(|v| v.is_finite()) {
            return Err(NumericsError::NonFinite { context: "matmul" });
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec length mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T * v` for a column vector `v`.
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "matvec_t length mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// Largest singular value via power iteration on `W^T W`.
    ///
    /// Starts from the normalized all-ones vector and stops once successive
    /// estimates agree to `tol` (or after `iters` rounds). A zero matrix
    /// returns exactly `0.0`. The estimate is a Rayleigh quotient and so never
    /// exceeds the true norm beyond roundoff.
    pub fn spectral_norm(&self, iters: usize, tol: f64) -> f64 {
        assert!(self.rows > 0 && self.cols > 0, "spectral_norm of empty matrix");
        assert!(iters >= 1, "spectral_norm needs at least one iteration");
        if self.data.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        let n = self.cols;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut prev = 0.0f64;
        for it in 0..iters {
            let wv = self.matvec(&v);
            let s = norm2(&wv);
            if s == 0.0 {
                // v landed in the null space: restart from a basis vector.
                v.iter_mut().for_each(|x| *x = 0.0);
                v[it % n] = 1.0;
                continue;
            }
            let u: Vec<f64> = wv.iter().map(|x| x / s).collect();
            let wtu = self.matvec_t(&u);
            let t = norm2(&wtu);
            if t == 0.0 {
                return s;
            }
            v = wtu.iter().map(|x| x / t).collect();
            if (t - prev).abs() <= tol * t.max(1.0) {
                return t;
            }
            prev = t;
        }
        prev
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            data: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Matrix::new(raw.rows, raw.cols, raw.data).map_err(serde::de::Error::custom)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dgemm_block(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
) {
    debug_assert_eq!(c.len(), m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `a * b` without the finiteness scan. Row blocks of fixed size run in
/// parallel; each output element is accumulated inside a single gemm call, so
/// the result is identical for any worker count.
pub(crate) fn gemm_nn(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols, b.rows);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = Matrix::zeros(m, n);
    if m > PAR_ROW_BLOCK {
        out.data
            .par_chunks_mut(PAR_ROW_BLOCK * n)
            .zip(a.data.par_chunks(PAR_ROW_BLOCK * k))
            .for_each(|(cchunk, achunk)| {
                let mb = cchunk.len() / n;
                dgemm_block(mb, k, n, achunk, k as isize, 1, &b.data, n as isize, 1, cchunk);
            });
    } else {
        dgemm_block(m, k, n, &a.data, k as isize, 1, &b.data, n as isize, 1, &mut out.data);
    }
    out
}

/// `a * b^T` without materializing the transpose.
pub(crate) fn gemm_nt(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols, b.cols);
    let (m, k, n) = (a.rows, a.cols, b.rows);
    let mut out = Matrix::zeros(m, n);
    if m > PAR_ROW_BLOCK {
        out.data
            .par_chunks_mut(PAR_ROW_BLOCK * n)
            .zip(a.data.par_chunks(PAR_ROW_BLOCK * k))
            .for_each(|(cchunk, achunk)| {
                let mb = cchunk.len() / n;
                dgemm_block(mb, k, n, achunk, k as isize, 1, &b.data, 1, k as isize, cchunk);
            });
    } else {
        dgemm_block(m, k, n, &a.data, k as isize, 1, &b.data, 1, k as isize, &mut out.data);
    }
    out
}

/// `a^T * b` where `a` and `b` share their (large) row count. The row range is
/// cut into fixed blocks whose partial products are reduced in block order.
pub(crate) fn gemm_tn(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.rows, b.rows);
    let (m, k, n) = (a.cols, a.rows, b.cols);
    if k <= PAR_K_BLOCK {
        let mut out = Matrix::zeros(m, n);
        dgemm_block(m, k, n, &a.data, 1, m as isize, &b.data, n as isize, 1, &mut out.data);
        return out;
    }
    let partials: Vec<Vec<f64>> = a
        .data
        .par_chunks(PAR_K_BLOCK * m)
        .zip(b.data.par_chunks(PAR_K_BLOCK * n))
        .map(|(achunk, bchunk)| {
            let kb = achunk.len() / m;
            let mut c = vec![0.0; m * n];
            dgemm_block(m, kb, n, achunk, 1, m as isize, bchunk, n as isize, 1, &mut c);
            c
        })
        .collect();
    let mut out = Matrix::zeros(m, n);
    for p in partials {
        for (o, x) in out.data.iter_mut().zip(p) {
            *o += x;
        }
    }
    out
}

/// Column sums of `a`, reduced over fixed row blocks in block order.
pub(crate) fn column_sums(a: &Matrix) -> Vec<f64> {
    let n = a.cols;
    let partials: Vec<Vec<f64>> = a
        .data
        .par_chunks(PAR_K_BLOCK * n)
        .map(|chunk| {
            let mut s = vec![0.0; n];
            for row in chunk.chunks_exact(n) {
                for (acc, v) in s.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            s
        })
        .collect();
    let mut out = vec![0.0; n];
    for p in partials {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    out
}
