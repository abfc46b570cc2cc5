// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fast tests that combine analytic p-values of the scan maxima.
//!
//! `fgkcp1` combines `max |Z_D|`, `max Z_{W,1.2}` and `max Z_{W,0.8}`;
//! `fgkcp2` drops `Z_D`. Either is combined by Bonferroni or Simes. The
//! reported change is the argmax of the GKCP scan in both cases.

use serde::{Deserialize, Serialize};

use crate::analytic::{TailApproxConfig, TailKind, TailModel};
use crate::error::{Error, Result};
use crate::gram::GramSummary;
use crate::num::{to_f64, Scalar};
use crate::scan::{scan_interval, scan_single, ScanBounds, ScanContext};

/// The two `r` values used by the fast tests.
pub const R_HIGH: f64 = 1.2;
pub const R_LOW: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FastMethod {
    Fgkcp1,
    Fgkcp2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    #[default]
    Bonferroni,
    Simes,
}

/// A detected change: a split point (first `t` observations before the
/// change) or a changed interval `(start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeEstimate {
    Point(usize),
    Interval { start: usize, end: usize },
}

/// Component p-values and scan maxima shared by every fast variant.
#[derive(Clone, Debug, Serialize)]
pub struct FastPValues {
    /// `None` when `Z_D` was not evaluated.
    pub p_d: Option<f64>,
    pub p_w12: f64,
    pub p_w08: f64,
    pub max_abs_zd: f64,
    pub max_zw12: f64,
    pub max_zw08: f64,
    pub max_gkcp: f64,
    pub argmax: ChangeEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct FastTestReport {
    pub method: FastMethod,
    pub combination: Combination,
    pub alpha: f64,
    pub p_d: Option<f64>,
    pub p_w12: f64,
    pub p_w08: f64,
    pub combined_p: f64,
    pub rejected: bool,
    /// The GKCP argmax, reported only on rejection.
    pub estimated_change: Option<ChangeEstimate>,
    pub max_gkcp: f64,
    pub argmax: ChangeEstimate,
}

/// `min(1, k min p)`.
pub fn bonferroni_combine(pvals: &[f64]) -> f64 {
    let k = pvals.len() as f64;
    let min = pvals.iter().copied().fold(f64::INFINITY, f64::min);
    (k * min).clamp(0.0, 1.0)
}

/// `min_i (k / i) p_(i)` over the sorted p-values, clamped to `[0, 1]`.
pub fn simes_combine(pvals: &[f64]) -> f64 {
    let mut p = pvals.to_vec();
    p.sort_by(f64::total_cmp);
    let k = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &pi)| k / (i + 1) as f64 * pi)
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0)
}

/// Computes the component p-values; `Z_D` only when `with_d` is set.
pub fn fast_pvalues<T: Scalar>(
    g: &GramSummary<T>,
    tail: &TailApproxConfig,
    interval: bool,
    with_d: bool,
) -> Result<FastPValues> {
    let r_list = [lit::<T>(R_HIGH)?, lit::<T>(R_LOW)?];
    let ctx = ScanContext::new(g, tail.bounds, &r_list)?;
    let (max_abs_zd, max_zw12, max_zw08, max_gkcp, argmax) = if interval {
        let p = scan_interval(g, &ctx);
        let (start, end) = p.argmax;
        (
            p.max_abs_zd(),
            p.max_zw(0),
            p.max_zw(1),
            p.max_gkcp,
            ChangeEstimate::Interval { start, end },
        )
    } else {
        let p = scan_single(g, &ctx);
        (
            p.max_abs_zd(),
            p.max_zw(0),
            p.max_zw(1),
            p.max_gkcp,
            ChangeEstimate::Point(p.argmax_t),
        )
    };
    let (kd, kw12, kw08) = if interval {
        (
            TailKind::IntervalD,
            TailKind::IntervalW { r: R_HIGH },
            TailKind::IntervalW { r: R_LOW },
        )
    } else {
        (
            TailKind::SingleD,
            TailKind::SingleW { r: R_HIGH },
            TailKind::SingleW { r: R_LOW },
        )
    };
    let kinds = if with_d {
        vec![kw12, kw08, kd]
    } else {
        vec![kw12, kw08]
    };
    let models = TailModel::build_many(g, tail, &kinds)?;
    Ok(FastPValues {
        p_d: models.get(2).map(|m| m.pvalue(to_f64(max_abs_zd))),
        p_w12: models[0].pvalue(to_f64(max_zw12)),
        p_w08: models[1].pvalue(to_f64(max_zw08)),
        max_abs_zd: to_f64(max_abs_zd),
        max_zw12: to_f64(max_zw12),
        max_zw08: to_f64(max_zw08),
        max_gkcp: to_f64(max_gkcp),
        argmax,
    })
}

fn lit<T: Scalar>(x: f64) -> Result<T> {
    T::from_f64(x).ok_or_else(|| Error::InvalidConfig(format!("{x} is not representable")))
}

impl FastPValues {
    /// Combines the components for `method`. `fgkcp1` needs `p_d`.
    pub fn combine(
        &self,
        method: FastMethod,
        combination: Combination,
        alpha: f64,
    ) -> Result<FastTestReport> {
        let pvals: Vec<f64> = match method {
            FastMethod::Fgkcp1 => {
                let p_d = self
                    .p_d
                    .ok_or_else(|| Error::InvalidConfig("fgkcp1 needs the Z_D p-value".into()))?;
                vec![p_d, self.p_w12, self.p_w08]
            }
            FastMethod::Fgkcp2 => vec![self.p_w12, self.p_w08],
        };
        let combined_p = match combination {
            Combination::Bonferroni => bonferroni_combine(&pvals),
            Combination::Simes => simes_combine(&pvals),
        };
        let rejected = combined_p < alpha;
        Ok(FastTestReport {
            method,
            combination,
            alpha,
            p_d: self.p_d,
            p_w12: self.p_w12,
            p_w08: self.p_w08,
            combined_p,
            rejected,
            estimated_change: rejected.then_some(self.argmax),
            max_gkcp: self.max_gkcp,
            argmax: self.argmax,
        })
    }
}

/// Runs one fast test with full control over the tail approximation.
pub fn fast_test<T: Scalar>(
    g: &GramSummary<T>,
    tail: &TailApproxConfig,
    method: FastMethod,
    combination: Combination,
    alpha: f64,
    interval: bool,
) -> Result<FastTestReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha = {alpha} is outside (0, 1]"
        )));
    }
    let with_d = method == FastMethod::Fgkcp1;
    fast_pvalues(g, tail, interval, with_d)?.combine(method, combination, alpha)
}

/// `fgkcp1` with Bonferroni combination and default tail settings.
pub fn fgkcp1<T: Scalar>(
    g: &GramSummary<T>,
    bounds: ScanBounds,
    alpha: f64,
) -> Result<FastTestReport> {
    let tail = TailApproxConfig::new(bounds);
    fast_test(
        g,
        &tail,
        FastMethod::Fgkcp1,
        Combination::Bonferroni,
        alpha,
        false,
    )
}

/// `fgkcp2` with Bonferroni combination and default tail settings.
pub fn fgkcp2<T: Scalar>(
    g: &GramSummary<T>,
    bounds: ScanBounds,
    alpha: f64,
) -> Result<FastTestReport> {
    let tail = TailApproxConfig::new(bounds);
    fast_test(
        g,
        &tail,
        FastMethod::Fgkcp2,
        Combination::Bonferroni,
        alpha,
        false,
    )
}
