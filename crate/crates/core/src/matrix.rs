//! Dense row-major matrices and the handful of factorizations the flow needs.
//!
//! Everything here is sized for the adapter rank `r` (tens at most) plus
//! products against the full `m x n` weight. The eigensolver is cyclic
//! Jacobi, which is slow for large matrices but exact enough and fully
//! deterministic at these sizes.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Relative off-diagonal tolerance for the Jacobi eigensolver.
pub const JACOBI_TOL: f64 = 1e-13;
/// Sweep budget for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Pivots (Cholesky) and eigenvalue sums (Sylvester) at or below this
/// fraction of the input norm are treated as zero.
pub const DEGENERACY_TOL: f64 = 1e-14;
/// Singular values below this fraction of the largest one are clamped when
/// they have to be inverted.
pub const SINGULAR_CLAMP: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "Matrix::new",
                detail: format!("{} entries for a {rows}x{cols} matrix", data.len()),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    /// Row-major construction from nested slices; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self::new(r, c, data).expect("finite entries")
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape {:?} x {:?}", self.shape(), rhs.shape());
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            let a_row = &self.data[i * k..(i + 1) * k];
            for (p, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self { rows: m, cols: n, data: out }
    }

    /// `selfᵀ * rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "tr_matmul shape {:?}ᵀ x {:?}", self.shape(), rhs.shape());
        let (k, m, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; m * n];
        for p in 0..k {
            let a_row = &self.data[p * m..(p + 1) * m];
            let b_row = &rhs.data[p * n..(p + 1) * n];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self { rows: m, cols: n, data: out }
    }

    /// `self * rhsᵀ` without forming the transpose.
    pub fn matmul_tr(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "matmul_tr shape {:?} x {:?}ᵀ", self.shape(), rhs.shape());
        let (m, k, n) = (self.rows, self.cols, rhs.rows);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                let b_row = &rhs.data[j * k..(j + 1) * k];
                out[i * n + j] = dot(a_row, b_row);
            }
        }
        Self { rows: m, cols: n, data: out }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "axpy shape");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(alpha, other);
        out
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_diag(&self, value: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out.data[i * self.cols + i] += value;
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "inner shape");
        dot(&self.data, &other.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrize(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        Self::from_fn(n, n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `‖self − selfᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self[(i, j)] - self[(j, i)];
                s += d * d;
            }
        }
        s.sqrt()
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Self {
        let cols = range.len();
        Self::from_fn(self.rows, cols, |i, j| self[(i, range.start + j)])
    }

    /// Rows `range` as a new matrix.
    pub fn rows_range(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Matrix> for Matrix {
    fn sub_assign(&mut self, rhs: &Matrix) {
        self.axpy(-1.0, rhs);
    }
}

fn check_square(op: &'static str, m: &Matrix) -> Result<usize> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch { op, detail: format!("expected square, got {:?}", m.shape()) });
    }
    Ok(m.rows)
}

fn check_symmetric(m: &Matrix, tol: f64) -> Result<()> {
    let asym = m.asymmetry() / m.norm_fro().max(1.0);
    if asym > tol {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(g: &Matrix) -> Result<Self> {
        let n = check_square("cholesky", g)?;
        let threshold = DEGENERACY_TOL * g.norm_fro();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = g[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > threshold) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `G Z = rhs` column by column.
    pub fn solve(&self, rhs: &Matrix) -> Matrix {
        let n = self.l.rows;
        assert_eq!(rhs.rows, n, "cholesky solve rhs rows");
        let k = rhs.cols;
        let mut z = rhs.clone();
        // forward: L y = b
        for i in 0..n {
            for p in 0..i {
                let lip = self.l[(i, p)];
                if lip != 0.0 {
                    for c in 0..k {
                        z.data[i * k + c] -= lip * z.data[p * k + c];
                    }
                }
            }
            let d = self.l[(i, i)];
            for c in 0..k {
                z.data[i * k + c] /= d;
            }
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            for p in i + 1..n {
                let lpi = self.l[(p, i)];
                if lpi != 0.0 {
                    for c in 0..k {
                        z.data[i * k + c] -= lpi * z.data[p * k + c];
                    }
                }
            }
            let d = self.l[(i, i)];
            for c in 0..k {
                z.data[i * k + c] /= d;
            }
        }
        z
    }
}

/// Solves `G Z = rhs` for symmetric positive-definite `G`.
pub fn cholesky_solve(g: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    if rhs.rows != g.rows {
        return Err(Error::DimensionMismatch {
            op: "cholesky_solve",
            detail: format!("G is {:?}, rhs is {:?}", g.shape(), rhs.shape()),
        });
    }
    Ok(Cholesky::new(g)?.solve(rhs))
}

/// Symmetric eigendecomposition `H = Q diag(λ) Qᵀ`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub eigenvectors: Matrix,
}

impl SymEig {
    pub fn reconstruct(&self) -> Matrix {
        let q = &self.eigenvectors;
        let scaled = Matrix::from_fn(q.rows, q.cols, |i, j| q[(i, j)] * self.eigenvalues[j]);
        scaled.matmul_tr(q)
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn sym_eig(h: &Matrix) -> Result<SymEig> {
    let n = check_square("sym_eig", h)?;
    check_symmetric(h, 1e-12)?;
    let mut a = h.symmetrize();
    let mut v = Matrix::identity(n);
    let target = JACOBI_TOL * h.norm_fro();
    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with the (p, q) rotation
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        off = off_diagonal_norm(&a);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEig { eigenvalues, eigenvectors })
}

/// Solves `H X + X H = C` for symmetric positive-definite `H` and symmetric
/// `C` through the eigendecomposition of `H`. The result is symmetric.
pub fn sylvester_spd(h: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = check_square("sylvester_spd", h)?;
    if c.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            op: "sylvester_spd",
            detail: format!("H is {:?}, C is {:?}", h.shape(), c.shape()),
        });
    }
    let eig = sym_eig(h)?;
    let lam = &eig.eigenvalues;
    let min_sum = 2.0 * lam.first().copied().unwrap_or(0.0);
    if n > 0 && !(min_sum > DEGENERACY_TOL * h.norm_fro()) {
        return Err(Error::DegenerateSpectrum { min_sum });
    }
    let q = &eig.eigenvectors;
    let mut ct = q.tr_matmul(c).matmul(q);
    for i in 0..n {
        for j in 0..n {
            ct[(i, j)] /= lam[i] + lam[j];
        }
    }
    Ok(q.matmul(&ct).matmul_tr(q).symmetrize())
}

/// Rank-`k` truncated SVD `M ≈ U diag(σ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows, self.u.cols, |i, j| self.u[(i, j)] * self.sigma[j]);
        us.matmul_tr(&self.v)
    }
}

/// Orthonormalizes the columns of `m` in place (two-pass modified
/// Gram-Schmidt). Columns that collapse are replaced by the first coordinate
/// vector that survives projection, so the output always has orthonormal
/// columns.
fn orthonormalize_columns(m: &mut Matrix) {
    let (rows, cols) = m.shape();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let project_out = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = dot(v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
    };
    for j in 0..cols {
        let mut v = m.col(j);
        let original = norm2(&v);
        project_out(&mut v, &basis);
        let mut nv = norm2(&v);
        if !(nv > 1e-8 * original.max(f64::MIN_POSITIVE)) || original == 0.0 {
            for e in 0..rows {
                let mut cand = vec![0.0; rows];
                cand[e] = 1.0;
                project_out(&mut cand, &basis);
                let nc = norm2(&cand);
                if nc > 0.5 {
                    v = cand;
                    nv = nc;
                    break;
                }
            }
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        m.set_col(j, &v);
        basis.push(v);
    }
}

/// Truncated SVD through the eigendecomposition of the smaller Gram matrix.
pub fn thin_svd(m: &Matrix, k: usize) -> Result<ThinSvd> {
    let (rows, cols) = m.shape();
    if k > rows.min(cols) {
        return Err(Error::InvalidRank { rank: k, rows, cols });
    }
    // Work with the tall orientation; transpose back at the end.
    let tall = rows >= cols;
    let a = if tall { m.clone() } else { m.transpose() };
    let gram = a.tr_matmul(&a).symmetrize();
    let eig = sym_eig(&gram)?;
    let n = gram.rows;
    let sigma_all: Vec<f64> = (0..n).rev().map(|i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let sigma_max = sigma_all.first().copied().unwrap_or(0.0);
    let floor = (SINGULAR_CLAMP * sigma_max).max(f64::MIN_POSITIVE);
    let sigma: Vec<f64> = sigma_all[..k].to_vec();
    let v = Matrix::from_fn(n, k, |i, j| eig.eigenvectors[(i, n - 1 - j)]);
    let av = a.matmul(&v);
    let mut u = Matrix::from_fn(av.rows, k, |i, j| av[(i, j)] / sigma[j].max(floor));
    orthonormalize_columns(&mut u);
    Ok(if tall { ThinSvd { u, sigma, v } } else { ThinSvd { u: v, sigma, v: u } })
}

/// Householder QR of a square or tall matrix. Signs are fixed so that `R`
/// has a nonnegative diagonal, which makes `Q` a deterministic function of
/// the input.
pub fn qr_positive(m: &Matrix) -> (Matrix, Matrix) {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "qr_positive needs rows >= cols");
    let mut r = m.clone();
    let mut q = Matrix::identity(rows);
    for j in 0..cols {
        let x: Vec<f64> = (j..rows).map(|i| r[(i, j)]).collect();
        let alpha = norm2(&x);
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * alpha;
        let vn = norm2(&v);
        for e in v.iter_mut() {
            *e /= vn;
        }
        // R <- (I - 2vvᵀ) R on rows j.., Q <- Q (I - 2vvᵀ)
        for c in 0..cols {
            let s: f64 = (j..rows).map(|i| v[i - j] * r[(i, c)]).sum();
            for i in j..rows {
                r[(i, c)] -= 2.0 * v[i - j] * s;
            }
        }
        for row in 0..rows {
            let s: f64 = (j..rows).map(|i| q[(row, i)] * v[i - j]).sum();
            for i in j..rows {
                q[(row, i)] -= 2.0 * s * v[i - j];
            }
        }
    }
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            for c in 0..cols {
                r[(j, c)] = -r[(j, c)];
            }
            for row in 0..rows {
                q[(row, j)] = -q[(row, j)];
            }
        }
    }
    for i in 0..rows {
        for j in 0..cols.min(i) {
            r[(i, j)] = 0.0;
        }
    }
    (q.columns(0..cols), r.rows_range(0..cols))
}
