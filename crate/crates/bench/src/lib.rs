// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic data generators and Monte-Carlo studies for `gkcp`: empirical
//! size and power, analytic versus permutation critical values, and runtime
//! scaling.

pub mod error;
pub mod generators;
pub mod output;
pub mod studies;

pub use error::{BenchError, Result};
pub use generators::{generate, Family, GeneratorSpec};
pub use studies::{
    critical_value_study, derive_seed, power_study, run_study, runtime_study, scaling_exponent,
    size_study, CriticalValueRow, CvStatistic, ExperimentResult, RuntimeRow, StudyConfig,
    StudyOutput, TestKind,
};
