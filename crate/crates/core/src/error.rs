// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the change-point routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequence has {n} observations; at least {min} are required")]
    TooFewObservations { n: usize, min: usize },

    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("median pairwise distance is zero: all points identical")]
    AllPointsIdentical,

    #[error("kernel bandwidth must be finite and positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("non-finite kernel entry at ({row}, {col})")]
    NonFiniteKernel { row: usize, col: usize },

    #[error("kernel matrix is not symmetric at ({row}, {col})")]
    AsymmetricKernel { row: usize, col: usize },

    #[error("split t = {t} outside the valid range [2, {max}] for n = {n}")]
    DegenerateSplit { t: usize, n: usize, max: usize },

    #[error("null variance of the {statistic} statistic is zero at t = {t}")]
    ZeroVariance { statistic: &'static str, t: usize },

    #[error("invalid scan bounds n0 = {n0}, n1 = {n1} for n = {n}")]
    InvalidBounds { n0: usize, n1: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
