// SPDX-License-Identifier: MIT OR Apache-2.0

//! Kernel-based change-point detection.
//!
//! The scan statistic compares within-segment kernel similarity before and
//! after every candidate split, standardizes two linear combinations of the
//! within-group totals by their exact permutation moments, and combines them.
//! P-values come either from permutation or from analytic boundary-crossing
//! approximations with an optional skewness correction.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

// `!(x > y)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod fast;
pub mod gram;
pub mod moments;
pub mod num;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod permutation;
pub mod scan;
pub mod segmentation;

pub use analytic::{
    critical_value, nu, pval_interval_zd, pval_interval_zw, pval_single_zd, pval_single_zw,
    skewness_correct, DerivativeMode, PValueReport, TailApproxConfig, TailKind, TailModel,
};
pub use error::{Error, Result};
pub use fast::{
    bonferroni_combine, fast_pvalues, fast_test, fgkcp1, fgkcp2, simes_combine, ChangeEstimate,
    Combination, FastMethod, FastPValues, FastTestReport,
};
pub use gram::{
    build_gram, gaussian_gram, median_heuristic, CenteredAggregates, GramSummary, Sequence,
};
pub use moments::{
    cross_correlation, dw_moments, alpha_beta_moments, null_moments, third_moments, NullMoments,
};
pub use num::Scalar;
pub use permutation::{
    perm_pvalue, permutation, permutation_maxima, PermConfig, PermOutcome, PermStatistic,
};
pub use scan::{
    mmd_u_scan, scan_interval, scan_single, IntervalScanProfile, ScanBounds, ScanContext,
    ScanMaxima, ScanProfile,
};
pub use segmentation::{
    binary_segment, BandwidthMode, ChangeTree, NodeOutcome, SegmentConfig, SegmentMethod,
    SegmentNode,
};

/// Double-precision kernel summary.
pub type Gram = gram::GramSummary<f64>;
/// Single-precision kernel summary.
pub type Gram32 = gram::GramSummary<f32>;
/// Double-precision observation sequence.
pub type Seq = gram::Sequence<f64>;
/// Single-precision observation sequence.
pub type Seq32 = gram::Sequence<f32>;
/// Double-precision scan profile.
pub type Profile = scan::ScanProfile<f64>;
