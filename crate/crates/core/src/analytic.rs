// SPDX-License-Identifier: MIT OR Apache-2.0

//! Analytic tail approximations for the scan maxima.
//!
//! Each approximation is a sum over split sizes `t` of a local term built
//! from `C(t)`, the rate at which the standardized process decorrelates at
//! `t`, and the boundary-crossing correction [`nu`]. The skewness correction
//! multiplies every term by a factor derived from the exact third null
//! moment at `t`. Everything here is evaluated in `f64`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramSummary;
use crate::moments::{cross_correlation, limit_kernel_summaries, rho_w_limit, third_moments};
use crate::num::{norm_cdf, norm_pdf, to_f64, Scalar};
use crate::scan::ScanBounds;

/// Boundary-crossing correction `nu(s)`; 1 in the `s -> 0` limit.
pub fn nu(s: f64) -> f64 {
    if s < 1e-8 {
        return 1.0;
    }
    let h = s / 2.0;
    let phi_big = norm_cdf(h);
    (2.0 / s) * (phi_big - 0.5) / (h * phi_big + norm_pdf(h))
}

/// How `C(t)` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    /// `C(t) = 1 - rho(t, t+1)` from the exact finite-sample correlation.
    #[default]
    ExactDiscrete,
    /// `C(t) = h(t/n) / n` from the limiting correlation function.
    Asymptotic,
}

/// Settings shared by every analytic approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailApproxConfig {
    pub bounds: ScanBounds,
    pub skewness_correction: bool,
    pub derivative_mode: DerivativeMode,
}

impl TailApproxConfig {
    pub fn new(bounds: ScanBounds) -> Self {
        Self {
            bounds,
            skewness_correction: true,
            derivative_mode: DerivativeMode::default(),
        }
    }
}

/// Which maximum is being approximated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TailKind {
    /// `max_t |Z_D(t)|`.
    SingleD,
    /// `max_t Z_{W,r}(t)`.
    SingleW { r: f64 },
    /// `max |Z_D(t1, t2)|` over intervals.
    IntervalD,
    /// `max Z_{W,r}(t1, t2)` over intervals.
    IntervalW { r: f64 },
}

impl TailKind {
    fn is_d(&self) -> bool {
        matches!(self, TailKind::SingleD | TailKind::IntervalD)
    }

    fn is_interval(&self) -> bool {
        matches!(self, TailKind::IntervalD | TailKind::IntervalW { .. })
    }

    fn r(&self) -> f64 {
        match *self {
            TailKind::SingleW { r } | TailKind::IntervalW { r } => r,
            _ => 1.0,
        }
    }
}

/// Asymptotic `h` for `Z_D`: `1 / (2x(1-x))`.
pub fn h_d_limit(x: f64) -> f64 {
    1.0 / (2.0 * x * (1.0 - x))
}

/// Asymptotic `h` for `Z_{W,r}` by a one-sided difference of the limiting
/// correlation as `s` approaches `x` from below.
pub fn h_w_limit(x: f64, r: f64, r1: f64, r2: f64) -> f64 {
    const DELTA: f64 = 1e-6;
    (1.0 - rho_w_limit(x - DELTA, x, r, r1, r2)) / DELTA
}

/// `(C_D(t), C_{W,r}(t))`. In exact mode the last admissible split uses the
/// backward difference `1 - rho(t-1, t)`.
pub fn c_derivative<T: Scalar>(
    g: &GramSummary<T>,
    t: usize,
    r: f64,
    mode: DerivativeMode,
) -> Result<(f64, f64)> {
    let n = g.n();
    if t < 2 || t + 2 > n {
        return Err(Error::DegenerateSplit {
            t,
            n,
            max: n.saturating_sub(2),
        });
    }
    match mode {
        DerivativeMode::ExactDiscrete => {
            let (s, u) = if t + 3 <= n { (t, t + 1) } else { (t - 1, t) };
            let c = cross_correlation(g, s, u, T::from_f64(r).unwrap_or_else(T::one))?;
            Ok((1.0 - to_f64(c.rho_d), 1.0 - to_f64(c.rho_wr)))
        }
        DerivativeMode::Asymptotic => {
            let x = t as f64 / n as f64;
            let (r1, r2) = limit_kernel_summaries(g);
            Ok((h_d_limit(x) / n as f64, h_w_limit(x, r, r1, r2) / n as f64))
        }
    }
}

/// Per-split inputs of one tail approximation.
#[derive(Clone, Debug, Serialize)]
pub struct TailModel {
    pub kind: TailKind,
    pub n: usize,
    pub bounds: ScanBounds,
    pub t: Vec<usize>,
    /// `C(t)`; NaN where the statistic is degenerate at `t`.
    pub c: Vec<f64>,
    /// Skewness `gamma(t)`; `None` when the correction is disabled.
    pub skew: Option<Vec<f64>>,
}

impl TailModel {
    pub fn new<T: Scalar>(
        g: &GramSummary<T>,
        cfg: &TailApproxConfig,
        kind: TailKind,
    ) -> Result<Self> {
        Ok(Self::build_many(g, cfg, &[kind])?.remove(0))
    }

    /// Models for several kinds over one scan range, sharing the per-split
    /// moment computations.
    pub fn build_many<T: Scalar>(
        g: &GramSummary<T>,
        cfg: &TailApproxConfig,
        kinds: &[TailKind],
    ) -> Result<Vec<Self>> {
        let n = g.n();
        let bounds = ScanBounds::new(cfg.bounds.n0, cfg.bounds.n1, n)?;
        let mut rs: Vec<f64> = Vec::new();
        for kind in kinds {
            if kind.is_d() {
                continue;
            }
            if (kind.r() - 1.0).abs() < 1e-12 {
                return Err(Error::InvalidConfig(
                    "the W tail approximation needs r != 1".into(),
                ));
            }
            if !rs.contains(&kind.r()) {
                rs.push(kind.r());
            }
        }
        if rs.is_empty() {
            // D does not depend on r
            rs.push(1.0);
        }
        let ts: Vec<usize> = bounds.iter().collect();
        if cfg.derivative_mode == DerivativeMode::Asymptotic {
            // computed once; the per-t loop then only evaluates closed forms
            let _ = limit_kernel_summaries(g);
        }
        let per_t: Vec<Result<Vec<SplitInputs>>> = ts
            .par_iter()
            .map(|&t| rs.iter().map(|&r| split_inputs(g, t, r, cfg)).collect())
            .collect();
        let per_t = per_t.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(kinds
            .iter()
            .map(|&kind| {
                let (ri, is_d) = if kind.is_d() {
                    (0, true)
                } else {
                    (rs.iter().position(|&r| r == kind.r()).unwrap_or(0), false)
                };
                let pick = |x: &SplitInputs| {
                    if is_d {
                        (x.c_d, x.skew_d)
                    } else {
                        (x.c_w, x.skew_w)
                    }
                };
                Self {
                    kind,
                    n,
                    bounds,
                    t: ts.clone(),
                    c: per_t.iter().map(|p| pick(&p[ri]).0).collect(),
                    skew: cfg
                        .skewness_correction
                        .then(|| per_t.iter().map(|p| pick(&p[ri]).1).collect()),
                }
            })
            .collect())
    }

    fn base_term(&self, i: usize, b: f64) -> f64 {
        let c = self.c[i];
        if !(c.is_finite() && c > 0.0) {
            return 0.0;
        }
        let local = c * nu(b * (2.0 * c).sqrt());
        if self.kind.is_interval() {
            local * local * (self.n - self.t[i]) as f64
        } else {
            local
        }
    }

    fn prefactor(&self, b: f64) -> f64 {
        let power = if self.kind.is_interval() {
            b.powi(3)
        } else {
            b
        };
        let sides = if self.kind.is_d() { 2.0 } else { 1.0 };
        sides * power * norm_pdf(b)
    }

    /// `ln` of [`Self::prefactor`] for `b > 0`, without underflow.
    fn log_prefactor(&self, b: f64) -> f64 {
        let power = if self.kind.is_interval() { 3.0 } else { 1.0 };
        let sides: f64 = if self.kind.is_d() { 2.0 } else { 1.0 };
        sides.ln() + power * b.ln() - 0.5 * b * b - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Evaluates the approximation at `b`.
    pub fn report(&self, b: f64) -> PValueReport {
        let terms: Vec<f64> = (0..self.t.len()).map(|i| self.base_term(i, b)).collect();
        let pre = self.prefactor(b);
        // a maximum of standardized statistics exceeds any b <= 0 w.p. ~1
        // no usable split means the statistic is degenerate everywhere
        let usable = self.c.iter().any(|&c| c.is_finite() && c > 0.0);
        let p_base = if b <= 0.0 || !usable {
            1.0
        } else {
            clamp01(pre * terms.iter().sum::<f64>())
        };
        let mut rep = PValueReport {
            b,
            p_base,
            p_skew: None,
            t: self.t.clone(),
            c: self.c.clone(),
            nu: self
                .c
                .iter()
                .map(|&c| {
                    if c > 0.0 {
                        nu(b * (2.0 * c).sqrt())
                    } else {
                        f64::NAN
                    }
                })
                .collect(),
            s: Vec::new(),
            theta: Vec::new(),
            extrapolated: Vec::new(),
            dropped: Vec::new(),
            skew_fallback: false,
        };
        if let Some(gamma) = &self.skew {
            apply_skew(&mut rep, &terms, self.log_prefactor(b), gamma);
            if b <= 0.0 || !usable {
                rep.p_skew = Some(1.0);
            }
        }
        rep
    }

    /// P-value at `b`: skewness-corrected when available, else the base value.
    pub fn pvalue(&self, b: f64) -> f64 {
        self.report(b).p()
    }
}

/// `C` and skewness of `D` and `W_r` at one split; NaN where degenerate.
struct SplitInputs {
    c_d: f64,
    c_w: f64,
    skew_d: f64,
    skew_w: f64,
}

fn split_inputs<T: Scalar>(
    g: &GramSummary<T>,
    t: usize,
    r: f64,
    cfg: &TailApproxConfig,
) -> Result<SplitInputs> {
    let (c_d, c_w) = match c_derivative(g, t, r, cfg.derivative_mode) {
        Ok(c) => c,
        Err(Error::ZeroVariance { .. }) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    let (skew_d, skew_w) = if cfg.skewness_correction {
        match third_moments(g, t, T::from_f64(r).unwrap_or_else(T::one)) {
            Ok(s) => (to_f64(s.skew_d), to_f64(s.skew_wr)),
            Err(Error::ZeroVariance { .. }) => (f64::NAN, f64::NAN),
            Err(e) => return Err(e),
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(SplitInputs {
        c_d,
        c_w,
        skew_d,
        skew_w,
    })
}

fn clamp01(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// An analytic p-value with its per-split ingredients.
#[derive(Clone, Debug, Serialize)]
pub struct PValueReport {
    pub b: f64,
    pub p_base: f64,
    pub p_skew: Option<f64>,
    pub t: Vec<usize>,
    pub c: Vec<f64>,
    pub nu: Vec<f64>,
    /// Skewness factors `S(t)`; empty without the correction.
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    /// `theta(t)` was extrapolated because `1 + 2 gamma b < 0`.
    pub extrapolated: Vec<bool>,
    /// Term dropped because `1 + gamma theta <= 0` or `gamma` is undefined.
    pub dropped: Vec<bool>,
    /// No split had a usable `theta`; `p_skew` falls back to `p_base`.
    pub skew_fallback: bool,
}

impl PValueReport {
    pub fn p(&self) -> f64 {
        self.p_skew.unwrap_or(self.p_base)
    }
}

/// Saddle point `theta = (sqrt(1 + 2 gamma b) - 1) / gamma`.
fn theta_hat(gamma: f64, b: f64) -> Option<f64> {
    let disc = 1.0 + 2.0 * gamma * b;
    if !(disc >= 0.0) {
        return None;
    }
    if (gamma * b).abs() < 1e-8 {
        return Some(b - gamma * b * b / 2.0);
    }
    Some((disc.sqrt() - 1.0) / gamma)
}

/// `ln S(t)` for skewness `gamma` at threshold `b` and saddle point `theta`.
fn log_skew_factor(gamma: f64, b: f64, theta: f64) -> Option<f64> {
    let lin = 1.0 + gamma * theta;
    if !(lin > 0.0) {
        return None;
    }
    Some(0.5 * (b - theta).powi(2) + gamma * theta.powi(3) / 6.0 - 0.5 * lin.ln())
}

fn apply_skew(rep: &mut PValueReport, terms: &[f64], log_pre: f64, gamma: &[f64]) {
    let b = rep.b;
    let len = terms.len();
    let theta: Vec<Option<f64>> = gamma
        .iter()
        .map(|&g| if g.is_finite() { theta_hat(g, b) } else { None })
        .collect();
    let valid: Vec<usize> = (0..len).filter(|&i| theta[i].is_some()).collect();
    let mut out_theta = vec![f64::NAN; len];
    let mut extrapolated = vec![false; len];
    for i in 0..len {
        if let Some(th) = theta[i] {
            out_theta[i] = th;
        } else if gamma[i].is_finite() && !valid.is_empty() {
            out_theta[i] = extrapolate(&valid, &theta, i);
            extrapolated[i] = true;
        }
    }
    let mut s = vec![f64::NAN; len];
    let mut dropped = vec![false; len];
    let mut total = 0.0;
    for i in 0..len {
        match log_skew_factor(gamma[i], b, out_theta[i]) {
            Some(lf) if gamma[i].is_finite() && out_theta[i].is_finite() => {
                s[i] = lf.exp();
                if terms[i] > 0.0 {
                    total += (log_pre + lf).exp() * terms[i];
                }
            }
            _ => dropped[i] = terms[i] > 0.0,
        }
    }
    rep.skew_fallback = valid.is_empty();
    rep.p_skew = Some(if rep.skew_fallback {
        rep.p_base
    } else {
        clamp01(total)
    });
    rep.s = s;
    rep.theta = out_theta;
    rep.extrapolated = extrapolated;
    rep.dropped = dropped;
}

/// Linear extrapolation of `theta` at index `i` from the two valid indices
/// nearest to it (ties go to the smaller index).
fn extrapolate(valid: &[usize], theta: &[Option<f64>], i: usize) -> f64 {
    let mut near: Vec<usize> = valid.to_vec();
    near.sort_by_key(|&j| (j.abs_diff(i), j));
    match near.as_slice() {
        [j] => theta[*j].unwrap_or(f64::NAN),
        [j, k, ..] => {
            let (j, k) = ((*j).min(*k), (*j).max(*k));
            let (yj, yk) = (theta[j].unwrap_or(f64::NAN), theta[k].unwrap_or(f64::NAN));
            yj + (yk - yj) * (i as f64 - j as f64) / (k as f64 - j as f64)
        }
        [] => f64::NAN,
    }
}

/// `P(max_t |Z_D(t)| > b)`.
pub fn pval_single_zd(b: f64, model: &TailModel) -> PValueReport {
    debug_assert_eq!(model.kind, TailKind::SingleD);
    model.report(b)
}

/// `P(max_t Z_{W,r}(t) > b)`.
pub fn pval_single_zw(b: f64, model: &TailModel) -> PValueReport {
    debug_assert!(matches!(model.kind, TailKind::SingleW { .. }));
    model.report(b)
}

/// `P(max |Z_D(t1, t2)| > b)` over intervals.
pub fn pval_interval_zd(b: f64, model: &TailModel) -> PValueReport {
    debug_assert_eq!(model.kind, TailKind::IntervalD);
    model.report(b)
}

/// `P(max Z_{W,r}(t1, t2) > b)` over intervals.
pub fn pval_interval_zw(b: f64, model: &TailModel) -> PValueReport {
    debug_assert!(matches!(model.kind, TailKind::IntervalW { .. }));
    model.report(b)
}

/// Adds the skewness-corrected value to a base report using `gamma(t)`.
pub fn skewness_correct(base: &PValueReport, model: &TailModel, gamma: &[f64]) -> PValueReport {
    let mut rep = base.clone();
    let terms: Vec<f64> = (0..model.t.len())
        .map(|i| model.base_term(i, base.b))
        .collect();
    apply_skew(&mut rep, &terms, model.log_prefactor(base.b), gamma);
    rep
}

/// Threshold `b` in `[0.5, 8]` with `p(b) = level`, by bisection to 1e-4.
/// `skew` selects the corrected p-value when the model carries skewness.
pub fn critical_value(model: &TailModel, level: f64, skew: bool) -> f64 {
    let p = |b: f64| {
        let rep = model.report(b);
        if skew {
            rep.p()
        } else {
            rep.p_base
        }
    };
    let (mut lo, mut hi) = (0.5, 8.0);
    if p(lo) <= level {
        return lo;
    }
    if p(hi) > level {
        return hi;
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
