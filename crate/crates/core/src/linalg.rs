//! Small dense complex linear algebra: a column-major matrix type, Gram
//! products, and a Hermitian (Cholesky) solver.
//!
//! Kernels that matter for complexity accounting take a `&mut u64` tally and
//! add one unit per complex multiplication (or division) they perform.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative pivot threshold below which a Hermitian factorization is rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Dense complex matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major nested rows. Handy in tests.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dim("ragged rows"));
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Column matrix from a vector.
    pub fn from_column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_diagonal(&mut self, lambda: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += lambda;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |A - A^H| entry.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..=j {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = j * self.rows;
            for k in 0..self.cols {
                let b = other[(k, j)];
                let a = self.col(k);
                for (o, &x) in out.data[dst..dst + self.rows].iter_mut().zip(a) {
                    *o += x * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::dim(format!(
                "matrix {:?} times vector of length {}",
                self.shape(),
                v.len()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (k, &b) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += a * b;
            }
        }
        Ok(out)
    }

    /// `v^H A v`, real part only (the imaginary residue of a Hermitian form is dropped).
    pub fn quadratic_form(&self, v: &[C64]) -> Result<f64> {
        let av = self.matvec(v)?;
        Ok(inner(v, &av).re)
    }

    /// `(1/K) X X^H` computed with all `N^2 K` products (no symmetry shortcut),
    /// so that the instrumented count matches the classical cost model.
    pub fn sample_covariance(&self, tally: &mut u64) -> Self {
        let n = self.rows;
        let k = self.cols;
        let mut out = Self::zeros(n, n);
        for t in 0..k {
            let x = self.col(t);
            for j in 0..n {
                let c = x[j].conj();
                let dst = &mut out.data[j * n..(j + 1) * n];
                for (o, &xi) in dst.iter_mut().zip(x) {
                    *o += xi * c;
                }
            }
        }
        *tally += (n * n * k) as u64;
        if k > 0 {
            let inv = 1.0 / k as f64;
            out.data.iter_mut().for_each(|z| *z *= inv);
        }
        out
    }

    /// `(1/K) X s^*` with `N K` products.
    pub fn sample_cross_covariance(&self, s: &[C64], tally: &mut u64) -> Result<Vec<C64>> {
        if s.len() != self.cols {
            return Err(Error::dim(format!(
                "training sequence has {} symbols but the data matrix has {} columns",
                s.len(),
                self.cols
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (t, st) in s.iter().enumerate() {
            let c = st.conj();
            for (o, &x) in out.iter_mut().zip(self.col(t)) {
                *o += x * c;
            }
        }
        *tally += (self.rows * self.cols) as u64;
        if !s.is_empty() {
            let inv = 1.0 / s.len() as f64;
            out.iter_mut().for_each(|z| *z *= inv);
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// `a^H b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Lower-triangular Cholesky factor `A = L L^H` of a Hermitian positive
/// definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianCholesky {
    l: CMatrix,
}

impl HermitianCholesky {
    /// Factors `a`, reading only its lower triangle. Fails with
    /// [`Error::Singular`] when a pivot drops below `PIVOT_TOLERANCE` times
    /// the largest diagonal entry.
    pub fn factor(a: &CMatrix, remedy: &str, tally: &mut u64) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim(format!(
                "Cholesky needs a square matrix, got {:?}",
                a.shape()
            )));
        }
        let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
        let floor = PIVOT_TOLERANCE * scale.max(f64::MIN_POSITIVE);
        let mut l = CMatrix::zeros(n, n);
        let mut mults = 0u64;
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            mults += j as u64;
            if d.is_nan() || d <= floor {
                return Err(Error::Singular {
                    size: n,
                    row: j,
                    pivot: d,
                    remedy: remedy.to_string(),
                });
            }
            let d = d.sqrt();
            l[(j, j)] = C64::new(d, 0.0);
            let inv = 1.0 / d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s * inv;
            }
            mults += ((n - j - 1) * (j + 1)) as u64;
        }
        *tally += mults;
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &CMatrix {
        &self.l
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve(&self, b: &[C64], tally: &mut u64) -> Result<Vec<C64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::dim(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        // n(n-1)/2 multiplies plus n divisions per sweep, two sweeps.
        *tally += (n * (n - 1) + 2 * n) as u64;
        Ok(y)
    }

    pub fn solve_matrix(&self, b: &CMatrix, tally: &mut u64) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(b.col(j), tally)?;
            out.col_mut(j).copy_from_slice(&x);
        }
        Ok(out)
    }
}

/// One-shot Hermitian solve without tallying.
pub fn solve_hermitian(a: &CMatrix, b: &[C64], remedy: &str) -> Result<Vec<C64>> {
    let mut tally = 0;
    HermitianCholesky::factor(a, remedy, &mut tally)?.solve(b, &mut tally)
}
