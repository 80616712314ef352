//! Dense complex tensors and CP (canonical polyadic) filters.
//!
//! Layout follows the column-major index map: element `(n_1, ..., n_D)`
//! (1-based) lives at flat position `n_1 + (n_2-1)N_1 + ... + (n_D-1)N_1...N_{D-1}`.
//! Every public index and mode in this crate is 0-based, i.e. shifted down by
//! one from that formula.

use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, C64};

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Flat offset of a 0-based multi-index in column-major layout.
pub fn flat_index(dims: &[usize], index: &[usize]) -> Result<usize> {
    if dims.len() != index.len() {
        return Err(Error::Index(format!(
            "{}-way index into a {}-way tensor",
            index.len(),
            dims.len()
        )));
    }
    let mut flat = 0;
    let mut stride = 1;
    for (d, (&i, &n)) in index.iter().zip(dims).enumerate() {
        if i >= n {
            return Err(Error::Index(format!("index {i} on mode {d} of size {n}")));
        }
        flat += i * stride;
        stride *= n;
    }
    Ok(flat)
}

/// Inverse of [`flat_index`].
pub fn multi_index(dims: &[usize], mut flat: usize) -> Vec<usize> {
    dims.iter()
        .map(|&n| {
            let i = flat % n;
            flat /= n;
            i
        })
        .collect()
}

/// Column of the mode-`mode` unfolding that a multi-index lands in: the
/// remaining modes, in increasing order, with the lowest varying fastest.
pub fn unfolding_column(dims: &[usize], mode: usize, index: &[usize]) -> usize {
    let mut col = 0;
    let mut stride = 1;
    for (q, (&i, &n)) in index.iter().zip(dims).enumerate() {
        if q == mode {
            continue;
        }
        col += i * stride;
        stride *= n;
    }
    col
}

/// Dense D-way complex array.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl ComplexTensor {
    /// Reshapes a vector into a tensor with the given dimensions.
    pub fn from_vector(v: Vec<C64>, dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::dim(format!(
                "tensor dimensions must be positive, got {dims:?}"
            )));
        }
        let total: usize = dims.iter().product();
        if total != v.len() {
            return Err(Error::dim(format!(
                "dimensions {dims:?} hold {total} entries but the vector has {}",
                v.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data: v,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::from_vector(vec![zero(); dims.iter().product()], dims)
    }

    /// Views an `N x K` data matrix as an `N_1 x ... x N_D x K` tensor.
    pub fn from_samples(x: &CMatrix, dims: &[usize]) -> Result<Self> {
        let mut full = dims.to_vec();
        full.push(x.cols());
        if dims.iter().product::<usize>() != x.rows() {
            return Err(Error::dim(format!(
                "filter dimensions {dims:?} do not factor N = {}",
                x.rows()
            )));
        }
        Self::from_vector(x.data().to_vec(), &full)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn vectorize(&self) -> Vec<C64> {
        self.data.clone()
    }

    pub fn get(&self, index: &[usize]) -> Result<C64> {
        Ok(self.data[flat_index(&self.dims, index)?])
    }

    /// Mode-`mode` unfolding, an `N_mode x prod_{q != mode} N_q` matrix.
    pub fn unfold(&self, mode: usize) -> Result<CMatrix> {
        let d = self.order();
        if mode >= d {
            return Err(Error::Index(format!("mode {mode} of a {d}-way tensor")));
        }
        let rows = self.dims[mode];
        let cols = self.data.len() / rows;
        let mut out = CMatrix::zeros(rows, cols);
        let mut index = vec![0usize; d];
        for &value in &self.data {
            let col = unfolding_column(&self.dims, mode, &index);
            out[(index[mode], col)] = value;
            increment(&mut index, &self.dims);
        }
        Ok(out)
    }
}

fn increment(index: &mut [usize], dims: &[usize]) {
    for (i, &n) in index.iter_mut().zip(dims) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// Entries of the Kronecker product of every factor except `mode`, ordered
/// to match the columns of the mode-`mode` unfolding.
///
/// `vectors` holds one vector per mode other than `mode`, in increasing mode
/// order. Conjugation is left to the caller.
pub fn kronecker_complement(dims: &[usize], mode: usize, vectors: &[&[C64]]) -> Vec<C64> {
    let mut acc = vec![C64::new(1.0, 0.0)];
    let others = (0..dims.len()).filter(|&q| q != mode);
    for (_, v) in others.zip(vectors) {
        // Later modes vary slowest, so they go on the left.
        acc = kron(v, &acc);
    }
    acc
}

/// Multi-mode tensor-vector product `X x_{j != mode} w_j^H`.
///
/// `t` has dimensions `N_1 x ... x N_D x K` (the last axis indexes samples);
/// the result is the `N_mode x K` matrix whose `(n, k)` entry is the sum over
/// all other indices of `X[.., n, .., k]` times the conjugated vector entries.
pub fn mode_contract(t: &ComplexTensor, mode: usize, vectors: &[&[C64]]) -> Result<CMatrix> {
    let mut tally = 0;
    mode_contract_counted(t, mode, vectors, &mut tally)
}

pub fn mode_contract_counted(
    t: &ComplexTensor,
    mode: usize,
    vectors: &[&[C64]],
    tally: &mut u64,
) -> Result<CMatrix> {
    if t.order() < 2 {
        return Err(Error::dim(
            "contraction needs at least one filter mode plus the sample axis",
        ));
    }
    let dims = &t.dims()[..t.order() - 1];
    let samples = t.dims()[t.order() - 1];
    let d = dims.len();
    if mode >= d {
        return Err(Error::Index(format!("mode {mode} of a {d}-way tensor")));
    }
    if vectors.len() != d - 1 {
        return Err(Error::dim(format!(
            "expected {} contraction vectors, got {}",
            d - 1,
            vectors.len()
        )));
    }
    for (q, v) in (0..d).filter(|&q| q != mode).zip(vectors) {
        if v.len() != dims[q] {
            return Err(Error::dim(format!(
                "contraction vector for mode {q} has length {} but the mode has size {}",
                v.len(),
                dims[q]
            )));
        }
    }

    let weights: Vec<C64> = kronecker_complement(dims, mode, vectors)
        .into_iter()
        .map(|z| z.conj())
        .collect();
    // Every Kronecker stage after the first costs one product per entry.
    let mut len = 0u64;
    for (q, &n) in dims.iter().enumerate() {
        if q == mode {
            continue;
        }
        if len == 0 {
            len = n as u64;
        } else {
            len *= n as u64;
            *tally += len;
        }
    }

    let n_total: usize = dims.iter().product();
    let rows = dims[mode];
    // Row and column of each flat position in the mode unfolding.
    let mut placement = Vec::with_capacity(n_total);
    let mut index = vec![0usize; d];
    for _ in 0..n_total {
        placement.push((index[mode], unfolding_column(dims, mode, &index)));
        increment(&mut index, dims);
    }

    let mut out = CMatrix::zeros(rows, samples);
    for k in 0..samples {
        let x = &t.data()[k * n_total..(k + 1) * n_total];
        let col = out.col_mut(k);
        for (&value, &(row, j)) in x.iter().zip(&placement) {
            col[row] += value * weights[j];
        }
    }
    *tally += (n_total * samples) as u64;
    Ok(out)
}

/// Rank-`R`, order-`D` CP filter `W = sum_r w_{1,r} o ... o w_{D,r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFilter {
    dims: Vec<usize>,
    rank: usize,
    /// `factors[d][r]` has length `dims[d]`.
    factors: Vec<Vec<Vec<C64>>>,
}

impl CpFilter {
    pub fn new(factors: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::dim("a CP filter needs at least one mode"));
        }
        let rank = factors[0].len();
        if rank == 0 {
            return Err(Error::dim("a CP filter needs rank at least 1"));
        }
        let mut dims = Vec::with_capacity(factors.len());
        for (d, row) in factors.iter().enumerate() {
            if row.len() != rank {
                return Err(Error::dim(format!(
                    "mode {d} has {} factors, expected rank {rank}",
                    row.len()
                )));
            }
            let n = row[0].len();
            if n == 0 || row.iter().any(|w| w.len() != n) {
                return Err(Error::dim(format!(
                    "mode {d} factors must share one positive length"
                )));
            }
            dims.push(n);
        }
        Ok(Self {
            dims,
            rank,
            factors,
        })
    }

    /// Every factor set to the first canonical basis vector.
    pub fn canonical(dims: &[usize], rank: usize) -> Result<Self> {
        let factors = dims
            .iter()
            .map(|&n| {
                (0..rank)
                    .map(|_| {
                        let mut e = vec![zero(); n];
                        if n > 0 {
                            e[0] = C64::new(1.0, 0.0);
                        }
                        e
                    })
                    .collect()
            })
            .collect();
        Self::new(factors)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn factor(&self, mode: usize, r: usize) -> &[C64] {
        &self.factors[mode][r]
    }

    pub fn factor_mut(&mut self, mode: usize, r: usize) -> &mut [C64] {
        &mut self.factors[mode][r]
    }

    /// Stacked block `[w_{d,1}; ...; w_{d,R}]` of length `R N_d`.
    pub fn mode_block(&self, mode: usize) -> Vec<C64> {
        self.factors[mode].concat()
    }

    pub fn set_mode_block(&mut self, mode: usize, block: &[C64]) -> Result<()> {
        let n = self.dims[mode];
        if block.len() != n * self.rank {
            return Err(Error::dim(format!(
                "mode {mode} block needs {} entries, got {}",
                n * self.rank,
                block.len()
            )));
        }
        for (r, chunk) in block.chunks(n).enumerate() {
            self.factors[mode][r].copy_from_slice(chunk);
        }
        Ok(())
    }

    /// Filter coefficient `sum_r prod_d [w_{d,r}]_{n_d}` at a 0-based index.
    pub fn element(&self, index: &[usize]) -> Result<C64> {
        flat_index(&self.dims, index)?;
        Ok((0..self.rank)
            .map(|r| {
                index
                    .iter()
                    .enumerate()
                    .map(|(d, &i)| self.factors[d][r][i])
                    .product::<C64>()
            })
            .sum())
    }

    /// `vec(W) = sum_r w_{D,r} (x) ... (x) w_{1,r}`.
    pub fn vectorize(&self) -> Vec<C64> {
        let mut out = vec![zero(); self.len()];
        for r in 0..self.rank {
            for (o, t) in out.iter_mut().zip(self.rank_one_term(r)) {
                *o += t;
            }
        }
        out
    }

    /// Vectorization of the single rank-one term `r`.
    pub fn rank_one_term(&self, r: usize) -> Vec<C64> {
        let mut acc = vec![C64::new(1.0, 0.0)];
        for d in 0..self.order() {
            acc = kron(&self.factors[d][r], &acc);
        }
        acc
    }

    /// Factors of term `r` for every mode except `mode`, in mode order.
    pub fn complement(&self, mode: usize, r: usize) -> Vec<&[C64]> {
        (0..self.order())
            .filter(|&q| q != mode)
            .map(|q| self.factors[q][r].as_slice())
            .collect()
    }
}
