//! Classical linear MMSE equalizer: closed form from exact statistics, the
//! sample-based estimate, and the lag selection rule.

use serde::{Deserialize, Serialize};

use super::{EqualizerReport, TrainedFilter};
use crate::error::{Error, Result};
use crate::linalg::{inner, CMatrix, HermitianCholesky, C64};
use crate::metrics::ProductCounts;

/// Linear filter `w` targeting `s_u[k - delta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEqualizer {
    pub w: Vec<C64>,
    pub delta: usize,
}

/// Diagonal loading added to a covariance estimate before it is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Loading {
    /// Adds `lambda * I`.
    Absolute(f64),
    /// Adds `c * trace(R) / n * I`.
    Relative(f64),
}

impl Loading {
    pub const NONE: Loading = Loading::Absolute(0.0);

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            Loading::Absolute(v) | Loading::Relative(v) => v,
        };
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Config(format!("loading must be >= 0, got {v}")));
        }
        Ok(())
    }

    /// The `lambda` this rule adds to the diagonal of `r`.
    pub fn resolve(&self, r: &CMatrix) -> f64 {
        match *self {
            Loading::Absolute(v) => v,
            Loading::Relative(c) => {
                let n = r.rows().max(1) as f64;
                c * r.trace().re / n
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, Loading::Absolute(v) | Loading::Relative(v) if v == 0.0)
    }
}

impl Default for Loading {
    fn default() -> Self {
        Loading::Relative(1e-8)
    }
}

/// `J(w) = sigma_s^2 - p^H w - w^H p + w^H R_xx w`.
pub fn mse_objective(w: &[C64], r_xx: &CMatrix, p: &[C64], sigma_s2: f64) -> Result<f64> {
    if w.len() != p.len() || r_xx.shape() != (w.len(), w.len()) {
        return Err(Error::dim(format!(
            "w has length {}, p has length {}, R_xx is {:?}",
            w.len(),
            p.len(),
            r_xx.shape()
        )));
    }
    let cross = inner(p, w);
    Ok(sigma_s2 - 2.0 * cross.re + r_xx.quadratic_form(w)?)
}

/// `w = R_xx^{-1} p` via a Hermitian factorization.
pub fn mmse_theoretical(r_xx: &CMatrix, p: &[C64]) -> Result<Vec<C64>> {
    if r_xx.shape() != (p.len(), p.len()) {
        return Err(Error::dim(format!(
            "R_xx is {:?} but p has length {}",
            r_xx.shape(),
            p.len()
        )));
    }
    let mut tally = 0;
    HermitianCholesky::factor(r_xx, "apply diagonal loading", &mut tally)?.solve(p, &mut tally)
}

/// `sigma_s^2 - p^H R_xx^{-1} p`.
pub fn minimum_mse(r_xx: &CMatrix, p: &[C64], sigma_s2: f64) -> Result<f64> {
    let w = mmse_theoretical(r_xx, p)?;
    Ok(sigma_s2 - inner(p, &w).re)
}

/// Lag maximizing the diagonal of `R_ss H^H R_xx^{-1} H R_ss`, which
/// minimizes the attainable MSE. Returned 0-based: lag `q` targets
/// `s_u[k - q]`. Ties go to the smallest lag.
pub fn select_delta(r_ss: &CMatrix, h: &CMatrix, r_xx: &CMatrix) -> Result<usize> {
    let scores = delta_scores(r_ss, h, r_xx)?;
    let mut best = 0;
    for (q, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = q;
        }
    }
    Ok(best)
}

/// Diagonal of `R_ss H^H R_xx^{-1} H R_ss`.
pub fn delta_scores(r_ss: &CMatrix, h: &CMatrix, r_xx: &CMatrix) -> Result<Vec<f64>> {
    let a = h.matmul(r_ss)?;
    if r_xx.shape() != (h.rows(), h.rows()) {
        return Err(Error::dim(format!(
            "R_xx is {:?} for a channel with {} rows",
            r_xx.shape(),
            h.rows()
        )));
    }
    let mut tally = 0;
    let chol = HermitianCholesky::factor(r_xx, "apply diagonal loading", &mut tally)?;
    let z = chol.solve_matrix(&a, &mut tally)?;
    Ok((0..a.cols())
        .map(|q| inner(a.col(q), z.col(q)).re)
        .collect())
}

/// `(1/K) sum_k |s[k] - w^H x[k]|^2`.
pub fn sample_mse(w: &[C64], x: &CMatrix, s: &[C64]) -> Result<f64> {
    let y = apply_equalizer(w, x)?;
    if s.len() != y.len() {
        return Err(Error::dim(format!(
            "{} training symbols for {} outputs",
            s.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    Ok(y.iter()
        .zip(s)
        .map(|(a, b)| (b - a).norm_sqr())
        .sum::<f64>()
        / y.len() as f64)
}

/// Output `y[k] = w^H x[k]` for every column of `x`.
pub fn apply_equalizer(w: &[C64], x: &CMatrix) -> Result<Vec<C64>> {
    if w.len() != x.rows() {
        return Err(Error::dim(format!(
            "filter of length {} on {} antennas",
            w.len(),
            x.rows()
        )));
    }
    Ok((0..x.cols()).map(|k| inner(w, x.col(k))).collect())
}

/// Sample MMSE filter `(XX^H/K + lambda I)^{-1} X s^* / K`.
///
/// `s` must already be lag-aligned with the columns of `x`; `delta` is only
/// recorded in the result.
pub fn mmse_sample(
    x: &CMatrix,
    s: &[C64],
    delta: usize,
    loading: Loading,
) -> Result<EqualizerReport> {
    loading.validate()?;
    if x.cols() == 0 {
        return Err(Error::InvalidArgument("empty training frame".into()));
    }
    let mut counts = ProductCounts::default();
    let mut r = x.sample_covariance(&mut counts.statistics);
    let p = x.sample_cross_covariance(s, &mut counts.statistics)?;
    let lambda = loading.resolve(&r);
    r.add_diagonal(lambda);
    let remedy = format!(
        "the {}x{} sample covariance from K = {} snapshots is rank deficient; raise the loading or K",
        x.rows(),
        x.rows(),
        x.cols()
    );
    let w =
        HermitianCholesky::factor(&r, &remedy, &mut counts.solve)?.solve(&p, &mut counts.solve)?;
    let mse = sample_mse(&w, x, s)?;
    Ok(EqualizerReport {
        w_vec: w.clone(),
        filter: TrainedFilter::Linear(LinearEqualizer { w, delta }),
        iterations: 1,
        mse_trace: vec![mse],
        converged: true,
        counts: Some(counts),
    })
}
