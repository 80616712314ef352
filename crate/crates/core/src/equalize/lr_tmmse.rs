//! Low-rank tensor MMSE equalizer.
//!
//! The weight vector is reshaped into an `N_1 x ... x N_D` tensor constrained
//! to rank `R` in CP form. Fixing every mode but `d` makes the output linear in
//! the stacked factors `w_d = [w_{d,1}; ...; w_{d,R}]`:
//!
//! ```text
//! y[k] = w_d^H u_d[k],   u_{d,r}[k] = X[k] x_{j != d} w_{j,r}^H
//! ```
//!
//! so each mode is a small `R N_d` MMSE problem. Modes are updated in turn
//! until the vectorized filter stops moving.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{sample_mse, Loading};
use super::{EqualizerReport, TrainedFilter};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CMatrix, HermitianCholesky, C64};
use crate::metrics::ProductCounts;
use crate::sysmodel::complex_gaussian;
use crate::tensor::{mode_contract_counted, ComplexTensor, CpFilter};

/// Starting point for the CP factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// Every factor `e_1`. With `R > 1` the stacked blocks start out identical,
    /// so the first block covariance is singular unless loading is applied.
    Canonical,
    /// `e_1` plus an i.i.d. random-phase perturbation of the given modulus on
    /// every entry.
    CanonicalPerturbed { magnitude: f64 },
    /// I.i.d. unit-variance complex Gaussian entries.
    Random,
}

impl Default for Init {
    fn default() -> Self {
        Init::CanonicalPerturbed { magnitude: 1e-3 }
    }
}

impl Init {
    pub fn name(&self) -> &'static str {
        match self {
            Init::Canonical => "canonical",
            Init::CanonicalPerturbed { .. } => "canonical-perturbed",
            Init::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTmmseConfig {
    /// Filter dimensions `N_1..N_D`; their product must equal the antenna count.
    pub dims: Vec<usize>,
    pub rank: usize,
    /// Cap on outer sweeps.
    pub max_iters: usize,
    /// Stop once `||vec(W_i) - vec(W_{i-1})||^2 < epsilon`.
    pub epsilon: f64,
    pub loading: Loading,
    pub init: Init,
    /// Seed for randomized initializations.
    pub seed: u64,
}

impl Default for LrTmmseConfig {
    fn default() -> Self {
        Self {
            dims: vec![4, 4, 4],
            rank: 3,
            max_iters: 20,
            epsilon: 0.1,
            loading: Loading::default(),
            init: Init::default(),
            seed: 0,
        }
    }
}

impl LrTmmseConfig {
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self, antennas: usize) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config(format!(
                "filter dimensions must be positive, got {:?}",
                self.dims
            )));
        }
        let prod: usize = self.dims.iter().product();
        if prod != antennas {
            return Err(Error::Config(format!(
                "filter dimensions {:?} multiply to {prod}, not N = {antennas}",
                self.dims
            )));
        }
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Init::CanonicalPerturbed { magnitude } = self.init {
            if !magnitude.is_finite() || magnitude < 0.0 {
                return Err(Error::Config(format!(
                    "perturbation magnitude must be >= 0, got {magnitude}"
                )));
            }
        }
        self.loading.validate()
    }

    /// Builds the starting filter.
    pub fn initial_filter(&self) -> Result<CpFilter> {
        let mut filter = CpFilter::canonical(&self.dims, self.rank)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.init {
            Init::Canonical => {}
            Init::CanonicalPerturbed { magnitude } => {
                for d in 0..self.order() {
                    for r in 0..self.rank {
                        for z in filter.factor_mut(d, r) {
                            let phase = rng.random_range(0.0..std::f64::consts::TAU);
                            *z += C64::from_polar(magnitude, phase);
                        }
                    }
                }
            }
            Init::Random => {
                for d in 0..self.order() {
                    for r in 0..self.rank {
                        for z in filter.factor_mut(d, r) {
                            *z = complex_gaussian(&mut rng, 1.0);
                        }
                    }
                }
            }
        }
        Ok(filter)
    }
}

/// Stacked mode inputs `U_d = [U_{d,1}; ...; U_{d,R}]`, an `R N_d x K` matrix.
///
/// `samples` is the `N_1 x ... x N_D x K` reshape of the received frame.
pub fn mode_inputs(samples: &ComplexTensor, filter: &CpFilter, mode: usize) -> Result<CMatrix> {
    let mut tally = 0;
    mode_inputs_counted(samples, filter, mode, &mut tally)
}

fn mode_inputs_counted(
    samples: &ComplexTensor,
    filter: &CpFilter,
    mode: usize,
    tally: &mut u64,
) -> Result<CMatrix> {
    let nd = filter.dims()[mode];
    let k = samples.dims()[samples.order() - 1];
    let mut stacked = CMatrix::zeros(filter.rank() * nd, k);
    for r in 0..filter.rank() {
        let u = mode_contract_counted(samples, mode, &filter.complement(mode, r), tally)?;
        for t in 0..k {
            stacked.col_mut(t)[r * nd..(r + 1) * nd].copy_from_slice(u.col(t));
        }
    }
    Ok(stacked)
}

fn singular_remedy(mode: usize, rank: usize, init: Init, loading: Loading) -> String {
    let mut msg = format!("block covariance for mode {mode} is singular");
    if rank > 1 && matches!(init, Init::Canonical) {
        msg.push_str(
            "; canonical initialization makes all rank-one blocks identical, so the first block solve is rank deficient",
        );
    }
    if loading.is_zero() {
        msg.push_str(
            "; enable diagonal loading or use the canonical-perturbed/random initialization",
        );
    } else {
        msg.push_str("; increase the loading or the frame length");
    }
    msg
}

/// Trains the low-rank tensor MMSE filter on frame `x` (`N x K`) against the
/// lag-aligned training sequence `s`.
pub fn lr_tmmse_train(x: &CMatrix, s: &[C64], cfg: &LrTmmseConfig) -> Result<EqualizerReport> {
    cfg.validate(x.rows())?;
    if s.len() != x.cols() {
        return Err(Error::dim(format!(
            "{} training symbols for a frame of {} snapshots",
            s.len(),
            x.cols()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::InvalidArgument("empty training frame".into()));
    }
    let samples = ComplexTensor::from_samples(x, &cfg.dims)?;
    let mut filter = cfg.initial_filter()?;
    let mut counts = ProductCounts::default();
    let mut mse_trace = Vec::with_capacity(cfg.max_iters * cfg.order());
    let mut previous = filter.vectorize();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        for mode in 0..cfg.order() {
            let u = mode_inputs_counted(&samples, &filter, mode, &mut counts.contraction)?;
            let mut r = u.sample_covariance(&mut counts.statistics);
            let p = u.sample_cross_covariance(s, &mut counts.statistics)?;
            r.add_diagonal(cfg.loading.resolve(&r));
            let remedy = singular_remedy(mode, cfg.rank, cfg.init, cfg.loading);
            let block = HermitianCholesky::factor(&r, &remedy, &mut counts.solve)?
                .solve(&p, &mut counts.solve)?;
            filter.set_mode_block(mode, &block)?;
            mse_trace.push(sample_mse(&filter.vectorize(), x, s)?);
        }
        let current = filter.vectorize();
        let change: f64 = norm_sqr(
            &current
                .iter()
                .zip(&previous)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        log::trace!("sweep {iterations}: ||dw||^2 = {change:.3e}");
        previous = current;
        if change < cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(EqualizerReport {
        w_vec: previous,
        filter: TrainedFilter::Tensor(filter),
        iterations,
        mse_trace,
        converged,
        counts: Some(counts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equalize::linear::{apply_equalizer, mmse_sample};
    use crate::linalg::inner;

    fn random_frame(n: usize, k: usize, seed: u64) -> (CMatrix, Vec<C64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = CMatrix::from_fn(n, k, |_, _| complex_gaussian(&mut rng, 1.0));
        // A target correlated with the data so the filter is non-trivial.
        let w: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let s = (0..k)
            .map(|t| inner(&w, x.col(t)) + complex_gaussian(&mut rng, 0.5))
            .collect();
        (x, s)
    }

    #[test]
    fn single_mode_rank_one_is_sample_mmse() {
        let (x, s) = random_frame(8, 40, 1);
        let cfg = LrTmmseConfig {
            dims: vec![8],
            rank: 1,
            max_iters: 1,
            loading: Loading::NONE,
            init: Init::Canonical,
            ..Default::default()
        };
        let t = lr_tmmse_train(&x, &s, &cfg).unwrap();
        let m = mmse_sample(&x, &s, 0, Loading::NONE).unwrap();
        let scale = norm_sqr(&m.w_vec).sqrt();
        for (a, b) in t.w_vec.iter().zip(&m.w_vec) {
            assert!((a - b).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn block_output_matches_vectorized_output() {
        let (x, s) = random_frame(24, 50, 2);
        let cfg = LrTmmseConfig {
            dims: vec![2, 3, 4],
            rank: 2,
            max_iters: 2,
            init: Init::Random,
            ..Default::default()
        };
        let rep = lr_tmmse_train(&x, &s, &cfg).unwrap();
        let TrainedFilter::Tensor(filter) = &rep.filter else {
            panic!("expected a tensor filter");
        };
        let samples = ComplexTensor::from_samples(&x, &cfg.dims).unwrap();
        let y = apply_equalizer(&rep.w_vec, &x).unwrap();
        for mode in 0..3 {
            let u = mode_inputs(&samples, filter, mode).unwrap();
            let wd = filter.mode_block(mode);
            for (k, yk) in y.iter().enumerate() {
                let yb = inner(&wd, u.col(k));
                assert!((yb - yk).norm() <= 1e-10 * yk.norm().max(1e-3));
            }
        }
    }

    #[test]
    fn canonical_init_with_rank_two_is_singular_without_loading() {
        let (x, s) = random_frame(16, 60, 3);
        let cfg = LrTmmseConfig {
            dims: vec![4, 4],
            rank: 2,
            loading: Loading::NONE,
            init: Init::Canonical,
            ..Default::default()
        };
        let err = lr_tmmse_train(&x, &s, &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("canonical initialization"), "{msg}");
        assert!(msg.contains("loading"), "{msg}");
    }

    #[test]
    fn canonical_init_runs_with_loading() {
        let (x, s) = random_frame(16, 60, 3);
        let cfg = LrTmmseConfig {
            dims: vec![4, 4],
            rank: 2,
            loading: Loading::Relative(1e-6),
            init: Init::Canonical,
            ..Default::default()
        };
        let rep = lr_tmmse_train(&x, &s, &cfg).unwrap();
        assert!(!rep.mse_trace.is_empty());
    }

    #[test]
    fn trace_is_monotone_without_loading() {
        let (x, s) = random_frame(16, 120, 4);
        let cfg = LrTmmseConfig {
            dims: vec![4, 4],
            rank: 2,
            max_iters: 6,
            epsilon: 1e-12,
            loading: Loading::NONE,
            ..Default::default()
        };
        let rep = lr_tmmse_train(&x, &s, &cfg).unwrap();
        assert_eq!(rep.mse_trace.len(), 12);
        for pair in rep.mse_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10, "{pair:?}");
        }
    }

    #[test]
    fn counts_are_deterministic_and_phase_sized() {
        let (x, s) = random_frame(16, 30, 5);
        let cfg = LrTmmseConfig {
            dims: vec![4, 4],
            rank: 3,
            max_iters: 1,
            ..Default::default()
        };
        let a = lr_tmmse_train(&x, &s, &cfg).unwrap().counts.unwrap();
        let b = lr_tmmse_train(&x, &s, &cfg).unwrap().counts.unwrap();
        assert_eq!(a, b);
        // Two modes, each with a 12 x 30 stacked input.
        assert_eq!(a.statistics, 2 * (12 * 12 * 30 + 12 * 30));
        assert_eq!(a.contraction, 2 * 3 * 16 * 30);
    }

    #[test]
    fn rejects_bad_configuration() {
        let (x, s) = random_frame(12, 20, 6);
        let bad = LrTmmseConfig {
            dims: vec![2, 5],
            ..Default::default()
        };
        assert!(matches!(
            lr_tmmse_train(&x, &s, &bad),
            Err(Error::Config(_))
        ));
        let bad = LrTmmseConfig {
            dims: vec![3, 4],
            rank: 0,
            ..Default::default()
        };
        assert!(lr_tmmse_train(&x, &s, &bad).is_err());
        let ok = LrTmmseConfig {
            dims: vec![3, 4],
            ..Default::default()
        };
        assert!(lr_tmmse_train(&x, &s[..5], &ok).is_err());
    }

    #[test]
    fn perturbed_init_is_seeded() {
        let cfg = LrTmmseConfig::default();
        assert_eq!(cfg.initial_filter().unwrap(), cfg.initial_filter().unwrap());
        let other = LrTmmseConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(
            cfg.initial_filter().unwrap(),
            other.initial_filter().unwrap()
        );
        let f = cfg.initial_filter().unwrap();
        let z = f.factor(0, 0)[1];
        assert!((z.norm() - 1e-3).abs() < 1e-15);
    }
}
