use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major `f64` matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(
                "Matrix::new",
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(
                    "Matrix::from_rows",
                    format!("row 0 has {cols} values"),
                    format!("row {i} has {}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row_vector(values: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Contiguous block of rows `[start, end)`.
    #[inline]
    pub fn rows_slice(&self, start: usize, end: usize) -> &[f64] {
        &self.data[start * self.cols..end * self.cols]
    }

    #[inline]
    pub fn rows_slice_mut(&mut self, start: usize, end: usize) -> &mut [f64] {
        &mut self.data[start * self.cols..end * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Standard product with per-entry summation over the shared index in
    /// ascending order.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(
                "matmul",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm_acc(
            &self.data,
            &other.data,
            &mut out.data,
            self.rows,
            self.cols,
            other.cols,
        );
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        transpose_into(&self.data, &mut out.data, self.rows, self.cols);
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(
                "add_assign",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Adds `bias` (length == cols) to every row.
    pub fn add_row_broadcast(&mut self, bias: &[f64]) {
        debug_assert_eq!(bias.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols.max(1)) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    /// Column sums accumulated into `out` (top to bottom).
    pub fn column_sums_into(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.cols);
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
    }

    /// Copies the column range `[start, start+width)` into a new matrix.
    pub fn columns(&self, start: usize, width: usize) -> Matrix {
        let mut out = Matrix::zeros(self.rows, width);
        for r in 0..self.rows {
            out.row_mut(r)
                .copy_from_slice(&self.row(r)[start..start + width]);
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "\n  {:?}", &self.row(r)[..self.cols.min(8)])?;
        }
        write!(f, "]")
    }
}

const TILE_M: usize = 4;
const TILE_N: usize = 16;
/// Depth of a k-panel; keeps the streamed panels of both operands in cache.
const BLOCK_K: usize = 128;

/// `c[m×n] += A · b[k×n]` where `A(i, p) = a[i * rs + p * ks]`.
///
/// Every output entry accumulates its `k` products with fused multiply-adds
/// in ascending index order, whatever tile or panel it falls in, so results
/// are bit-reproducible and a row's value never depends on the other rows in
/// the batch.
#[allow(clippy::too_many_arguments)]
fn gemm_strided(
    a: &[f64],
    rs: usize,
    ks: usize,
    b: &[f64],
    c: &mut [f64],
    m: usize,
    k: usize,
    n: usize,
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    assert!(
        a.len() > (m - 1) * rs + (k - 1) * ks && b.len() >= k * n && c.len() >= m * n,
        "gemm operand too short"
    );
    let mut p0 = 0;
    while p0 < k {
        let p1 = (p0 + BLOCK_K).min(k);
        gemm_panel(a, rs, ks, b, c, m, p0, p1, n);
        p0 = p1;
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn gemm_panel(
    a: &[f64],
    rs: usize,
    ks: usize,
    b: &[f64],
    c: &mut [f64],
    m: usize,
    p0: usize,
    p1: usize,
    n: usize,
) {
    let full_n = n - n % TILE_N;
    let mut i = 0;
    while i + TILE_M <= m {
        let mut j = 0;
        while j < full_n {
            let mut acc = [[0.0f64; TILE_N]; TILE_M];
            for (r, row) in acc.iter_mut().enumerate() {
                row.copy_from_slice(&c[(i + r) * n + j..(i + r) * n + j + TILE_N]);
            }
            for p in p0..p1 {
                // SAFETY: `p < k`, `j + TILE_N <= n` and `i + TILE_M <= m`;
                // gemm_strided checked the operand lengths against these.
                let bt: &[f64; TILE_N] =
                    unsafe { &*(b.as_ptr().add(p * n + j) as *const [f64; TILE_N]) };
                for (r, row) in acc.iter_mut().enumerate() {
                    let x = unsafe { *a.get_unchecked((i + r) * rs + p * ks) };
                    for (v, &bv) in row.iter_mut().zip(bt) {
                        *v = x.mul_add(bv, *v);
                    }
                }
            }
            for (r, row) in acc.iter().enumerate() {
                c[(i + r) * n + j..(i + r) * n + j + TILE_N].copy_from_slice(row);
            }
            j += TILE_N;
        }
        if full_n < n {
            for r in i..i + TILE_M {
                edge_row(a, rs, ks, b, &mut c[r * n..(r + 1) * n], r, p0, p1, n, full_n);
            }
        }
        i += TILE_M;
    }
    for r in i..m {
        edge_row(a, rs, ks, b, &mut c[r * n..(r + 1) * n], r, p0, p1, n, 0);
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn edge_row(
    a: &[f64],
    rs: usize,
    ks: usize,
    b: &[f64],
    crow: &mut [f64],
    i: usize,
    p0: usize,
    p1: usize,
    n: usize,
    from: usize,
) {
    for p in p0..p1 {
        let x = a[i * rs + p * ks];
        for (v, &bv) in crow[from..].iter_mut().zip(&b[p * n + from..(p + 1) * n]) {
            *v = x.mul_add(bv, *v);
        }
    }
}

/// `c[m×n] += a[m×k] · b[k×n]`.
pub(crate) fn gemm_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    gemm_strided(a, k, 1, b, c, m, k, n);
}

/// `c[m×n] += aᵀ · b` with `a` stored `[k×m]` and `b` stored `[k×n]`.
pub(crate) fn gemm_tn_acc(a: &[f64], b: &[f64], c: &mut [f64], k: usize, m: usize, n: usize) {
    debug_assert!(a.len() >= k * m && b.len() >= k * n && c.len() >= m * n);
    gemm_strided(a, 1, m, b, c, m, k, n);
}

/// Writes the transpose of `src` (`rows×cols`) into `dst` (`cols×rows`).
pub(crate) fn transpose_into(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

pub(crate) fn transposed(src: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    transpose_into(src, &mut out, rows, cols);
    out
}
