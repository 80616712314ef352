//! Equalizer training: the linear MMSE benchmark and the low-rank tensor MMSE
//! filter.

pub mod linear;
pub mod lr_tmmse;

pub use linear::{
    apply_equalizer, delta_scores, minimum_mse, mmse_sample, mmse_theoretical, mse_objective,
    sample_mse, select_delta, LinearEqualizer, Loading,
};
pub use lr_tmmse::{lr_tmmse_train, mode_inputs, Init, LrTmmseConfig};

use crate::linalg::C64;
use crate::metrics::ProductCounts;
use crate::tensor::CpFilter;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedFilter {
    Linear(LinearEqualizer),
    Tensor(CpFilter),
}

/// Outcome of training one equalizer on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerReport {
    pub filter: TrainedFilter,
    /// Full-length weight vector `w` with `y[k] = w^H x[k]`.
    pub w_vec: Vec<C64>,
    /// Outer iterations (1 for closed-form filters).
    pub iterations: usize,
    /// Sample MSE after every block update (one entry for closed-form filters).
    pub mse_trace: Vec<f64>,
    pub converged: bool,
    pub counts: Option<ProductCounts>,
}

impl EqualizerReport {
    pub fn final_mse(&self) -> Option<f64> {
        self.mse_trace.last().copied()
    }
}

/// Per-phase products recorded during training, if counting was on.
pub fn instrumented_count(report: &EqualizerReport) -> Option<ProductCounts> {
    report.counts
}
