//! Low-rank canonical-polyadic tensor MMSE equalization for multi-user
//! frequency-selective MIMO uplinks.
//!
//! - [`tensor`]: dense complex tensors, unfoldings, contractions and CP filters.
//! - [`sysmodel`]: channel, symbol, and frame generation plus exact covariances.
//! - [`equalize`]: linear MMSE benchmark and the alternating low-rank trainer.
//! - [`metrics`]: SINR and product-count accounting.
//! - [`harness`]: seeded Monte Carlo campaigns, configuration, and CSV output.

pub mod equalize;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod sysmodel;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
