//! Experiment driver: configuration, seeded campaigns, and result output.

pub mod campaign;
pub mod config;
pub mod output;
pub mod selftest;

pub use campaign::{run_campaign, run_trial, trial_seed, ResultRow, TrialOutcome};
pub use config::{balanced_factorization, Campaign, DeltaRule, EqualizerId, SweepVar, TrialConfig};
pub use output::{
    default_complexity_configs, emit_complexity_table, emit_csv, emit_plot_data, read_csv,
    ComplexityConfig, ComplexityRow,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TENSOR_MMSE_OUT_DIR";
