//! SINR scoring and product-count accounting.
//!
//! The closed-form counters charge an `n x n` Hermitian solve exactly `n^3`
//! products. Instrumented counts come from the kernels themselves and are
//! reported next to the closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// `SINR(w) = w^H R_xx w / w^H (R_ii + R_bb) w`, as a linear ratio.
pub fn sinr(w: &[C64], r_xx: &CMatrix, r_ii: &CMatrix, r_bb: &CMatrix) -> Result<f64> {
    if w.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::InvalidArgument("SINR of an all-zero filter".into()));
    }
    let total = r_xx.quadratic_form(w)?;
    let impairment = r_ii.quadratic_form(w)? + r_bb.quadratic_form(w)?;
    if impairment.is_nan() || impairment <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "interference-plus-noise power {impairment:e} is not positive"
        )));
    }
    Ok(total / impairment)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Products for the sample-based linear MMSE filter:
/// `N^2 K + N K + N^3 + N^2`.
pub fn count_mmse(n: u64, k: u64) -> u128 {
    let (n, k) = (n as u128, k as u128);
    n * n * k + n * k + n * n * n + n * n
}

/// Which trailing per-block term to charge in the tensor product count.
///
/// The closed-form total ends each block with `+ N_d`, while the per-step
/// breakdown that precedes it charges `N_d^2` for applying the inverse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveTail {
    /// `+ N_d`, as in the closed-form total.
    #[default]
    Linear,
    /// `+ N_d^2`, as in the per-step breakdown.
    Quadratic,
}

/// Products for the low-rank tensor filter over `iterations` sweeps:
/// `I * sum_d [R (D-1) N K + N_d^2 K + N_d K + N_d^3 + tail(N_d)]`.
pub fn count_lr_tmmse(dims: &[u64], rank: u64, iterations: u64, k: u64, tail: SolveTail) -> u128 {
    let order = dims.len() as u128;
    let n: u128 = dims.iter().map(|&x| x as u128).product();
    let (r, k) = (rank as u128, k as u128);
    let per_sweep: u128 = dims
        .iter()
        .map(|&nd| {
            let nd = nd as u128;
            let tail = match tail {
                SolveTail::Linear => nd,
                SolveTail::Quadratic => nd * nd,
            };
            r * order.saturating_sub(1) * n * k + nd * nd * k + nd * k + nd * nd * nd + tail
        })
        .sum();
    iterations as u128 * per_sweep
}

/// Complex multiplications actually performed while training, by phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductCounts {
    /// Building the contracted inputs `U_d` (tensor filter only).
    pub contraction: u64,
    /// Sample covariance and cross-covariance estimation.
    pub statistics: u64,
    /// Hermitian factorization and triangular solves.
    pub solve: u64,
}

impl ProductCounts {
    pub fn total(&self) -> u64 {
        self.contraction + self.statistics + self.solve
    }

    pub fn merge(&mut self, other: &ProductCounts) {
        self.contraction += other.contraction;
        self.statistics += other.statistics;
        self.solve += other.solve;
    }
}

/// Closed-form and instrumented counts side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountComparison {
    pub formula: u128,
    pub instrumented: ProductCounts,
}

impl CountComparison {
    /// Instrumented total divided by the closed-form total.
    pub fn ratio(&self) -> f64 {
        self.instrumented.total() as f64 / self.formula as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn mmse_count_examples() {
        assert_eq!(count_mmse(512, 600), 292_073_472);
        assert_eq!(count_mmse(1, 1), 4);
        assert!(count_mmse(64, 601) > count_mmse(64, 600));
    }

    #[test]
    fn tensor_count_examples() {
        assert_eq!(
            count_lr_tmmse(&[8, 8, 8], 3, 2, 600, SolveTail::Linear),
            11_321_520
        );
        assert_eq!(count_lr_tmmse(&[8, 8, 8], 3, 0, 600, SolveTail::Linear), 0);
        // The quadratic tail adds 2 sweeps * 3 modes * (64 - 8).
        assert_eq!(
            count_lr_tmmse(&[8, 8, 8], 3, 2, 600, SolveTail::Quadratic),
            11_321_520 + 2 * 3 * 56
        );
        let ratio = count_mmse(512, 600) as f64 / 11_321_520.0;
        assert!((ratio - 25.8).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn sinr_without_desired_signal_is_unity() {
        let r_ii = CMatrix::from_rows(&[vec![c(2.0), c(0.5)], vec![c(0.5), c(1.0)]]).unwrap();
        let r_bb = CMatrix::identity(2).scale(c(0.1));
        let r_xx = r_ii.add(&r_bb).unwrap();
        let v = sinr(&[c(1.0), C64::new(0.3, -2.0)], &r_xx, &r_ii, &r_bb).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matched_filter_sinr() {
        let h = vec![C64::new(1.0, 1.0), c(-0.5), C64::new(0.0, 2.0)];
        let (s2, n2) = (2.0, 0.25);
        let r_dd = CMatrix::from_fn(3, 3, |i, j| h[i] * h[j].conj() * s2);
        let r_bb = CMatrix::identity(3).scale(c(n2));
        let r_ii = CMatrix::zeros(3, 3);
        let r_xx = r_dd.add(&r_bb).unwrap();
        let hh: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let v = sinr(&h, &r_xx, &r_ii, &r_bb).unwrap();
        assert!((v - (1.0 + s2 * hh / n2)).abs() < 1e-12);
        let scaled: Vec<C64> = h.iter().map(|z| z * C64::new(-3.0, 0.7)).collect();
        let v2 = sinr(&scaled, &r_xx, &r_ii, &r_bb).unwrap();
        assert!((v - v2).abs() < 1e-12 * v);
    }

    #[test]
    fn sinr_rejects_degenerate_inputs() {
        let z = CMatrix::zeros(2, 2);
        let i = CMatrix::identity(2);
        assert!(sinr(&[c(0.0), c(0.0)], &i, &z, &i).is_err());
        assert!(sinr(&[c(1.0), c(0.0)], &i, &z, &z).is_err());
    }

    #[test]
    fn db_round_trip() {
        assert!((to_db(100.0) - 20.0).abs() < 1e-12);
        assert!((from_db(to_db(3.7)) - 3.7).abs() < 1e-12);
    }
}
