//! Experiment driver layer: configuration records, named RNG streams, and
//! the theorem-level experiments the command line exposes.

pub mod config;
pub mod experiments;
pub mod streams;

pub use config::{default_truncation, CoeffConfig, ExperimentConfig, InnovConfig, TruncPurpose};
pub use experiments::{
    run_audit_conditions, run_chernoff, run_cov_limit, run_fclt, run_iso_rate, run_normalizers,
    run_simulate, FcltOptions, IsoRateOptions, RateTheorem,
};
pub use streams::SeedSpace;
