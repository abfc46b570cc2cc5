// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact moments of the split statistics under the permutation null.
//!
//! For a split at `t`, write `A(t) = sum_{i != j <= t} k_ij` and
//! `B(t) = sum_{i != j > t} k_ij` for the ordered-pair within-group totals,
//! so that `alpha = A / (t(t-1))` and `beta = B / ((n-t)(n-t-1))`.
//! Every statistic in this crate is a linear combination `c_a A + c_b B`:
//!
//! * `D(t) = A - B`,
//! * `W_r(t) = r (n-t-1)/(n-2) A + (t-1)/(n-2) B`.
//!
//! The `W_r` weights make `W_1` exactly uncorrelated with `D` at every finite
//! `n`, so the Mahalanobis form of the scan statistic splits as
//! `Z_D^2 + Z_{W,1}^2` without approximation.

mod patterns;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::GramSummary;
use crate::num::{count, to_f64, Scalar};
use patterns::{second_moment, split_weights, third_moment, LabelLaw};

/// Exact sampling probabilities for a split at `t`.
///
/// `p_m` is the chance that `m + 1` given distinct observations all land in
/// the first `t` positions; `q_m` is the same for the last `n - t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitWeights<T> {
    pub t: usize,
    pub p1: T,
    pub p2: T,
    pub p3: T,
    pub q1: T,
    pub q2: T,
    pub q3: T,
}

fn check_split(n: usize, t: usize) -> Result<()> {
    if n < 4 || t < 2 || t + 2 > n {
        return Err(Error::DegenerateSplit {
            t,
            n,
            max: n.saturating_sub(2),
        });
    }
    Ok(())
}

impl<T: Scalar> SplitWeights<T> {
    pub fn new(n: usize, t: usize) -> Result<Self> {
        check_split(n, t)?;
        let series = |m: usize| {
            let p1 = count::<T>(m * (m - 1)) / count(n * (n - 1));
            let p2 = p1 * count(m.saturating_sub(2)) / count(n - 2);
            let p3 = p2 * count(m.saturating_sub(3)) / count(n - 3);
            (p1, p2, p3)
        };
        let (p1, p2, p3) = series(t);
        let (q1, q2, q3) = series(n - t);
        Ok(Self {
            t,
            p1,
            p2,
            p3,
            q1,
            q2,
            q3,
        })
    }
}

/// Null means, variances and covariance of `alpha(t)` and `beta(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaBetaMoments<T> {
    pub t: usize,
    pub mean_alpha: T,
    pub mean_beta: T,
    pub var_alpha: T,
    pub var_beta: T,
    pub cov_ab: T,
}

impl<T: Scalar> AlphaBetaMoments<T> {
    /// Mean and variance of `c_a A + c_b B`.
    pub fn linear(&self, n: usize, c_a: T, c_b: T) -> (T, T) {
        let t = self.t;
        let sa = count::<T>(t * (t - 1));
        let sb = count::<T>((n - t) * (n - t - 1));
        let (ca, cb) = (c_a * sa, c_b * sb);
        let mean = ca * self.mean_alpha + cb * self.mean_beta;
        let var = ca * ca * self.var_alpha
            + cb * cb * self.var_beta
            + count::<T>(2) * ca * cb * self.cov_ab;
        (mean, var)
    }
}

/// Null moments of `alpha(t)` and `beta(t)` from the kernel aggregates.
pub fn alpha_beta_moments<T: Scalar>(g: &GramSummary<T>, t: usize) -> Result<AlphaBetaMoments<T>> {
    let n = g.n();
    let w = SplitWeights::<T>::new(n, t)?;
    let two = count::<T>(2);
    let four = count::<T>(4);
    let kbar2 = g.kbar * g.kbar;
    let sa = count::<T>(t * (t - 1));
    let sb = count::<T>((n - t) * (n - t - 1));
    let ea2 = (two * g.r1 * w.p1 + four * g.r2 * w.p2 + g.r3 * w.p3) / (sa * sa);
    let eb2 = (two * g.r1 * w.q1 + four * g.r2 * w.q2 + g.r3 * w.q3) / (sb * sb);
    let quad = count::<T>(n) * count::<T>(n - 1) * count::<T>(n - 2) * count::<T>(n - 3);
    Ok(AlphaBetaMoments {
        t,
        mean_alpha: g.kbar,
        mean_beta: g.kbar,
        var_alpha: ea2 - kbar2,
        var_beta: eb2 - kbar2,
        cov_ab: g.r3 / quad - kbar2,
    })
}

/// Coefficients `(c_a, c_b)` of `D(t)` on `(A, B)`.
pub fn d_coefficients<T: Scalar>() -> (T, T) {
    (T::one(), -T::one())
}

/// Coefficients `(c_a, c_b)` of `W_r(t)` on `(A, B)`.
pub fn w_coefficients<T: Scalar>(n: usize, t: usize, r: T) -> (T, T) {
    let denom = count::<T>(n - 2);
    (r * count::<T>(n - t - 1) / denom, count::<T>(t - 1) / denom)
}

/// Null mean and variance of `D(t)` and `W_r(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DwMoments<T> {
    pub t: usize,
    pub r: T,
    pub mean_d: T,
    pub var_d: T,
    pub mean_wr: T,
    pub var_wr: T,
}

pub fn dw_moments<T: Scalar>(g: &GramSummary<T>, t: usize, r: T) -> Result<DwMoments<T>> {
    let ab = alpha_beta_moments(g, t)?;
    Ok(dw_from_alpha_beta(&ab, g.n(), r))
}

pub(crate) fn dw_from_alpha_beta<T: Scalar>(ab: &AlphaBetaMoments<T>, n: usize, r: T) -> DwMoments<T> {
    let (da, db) = d_coefficients::<T>();
    let (wa, wb) = w_coefficients(n, ab.t, r);
    let (mean_d, var_d) = ab.linear(n, da, db);
    let (mean_wr, var_wr) = ab.linear(n, wa, wb);
    DwMoments {
        t: ab.t,
        r,
        mean_d,
        var_d,
        mean_wr,
        var_wr,
    }
}

/// Variance below which a linear statistic is treated as degenerate.
///
/// Closed-form variances are differences of terms of size
/// `(|c_a| t(t-1) + |c_b| (n-t)(n-t-1))^2 mean(k^2)`, so anything within a
/// few dozen ulps of that scale is rounding noise.
pub(crate) fn variance_floor<T: Scalar>(g: &GramSummary<T>, t: usize, c_a: T, c_b: T) -> T {
    let n = g.n();
    let span = c_a.abs() * count(t * (t - 1)) + c_b.abs() * count((n - t) * (n - t - 1));
    let mean_sq = g.r1 / count(n * (n - 1));
    count::<T>(64) * T::epsilon() * span * span * mean_sq
}

/// Skewness `E[(X - EX)^3] / var^{3/2}` of `D(t)` and `W_r(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Skewness<T> {
    pub t: usize,
    pub skew_d: T,
    pub skew_wr: T,
}

pub fn third_moments<T: Scalar>(g: &GramSummary<T>, t: usize, r: T) -> Result<Skewness<T>> {
    let n = g.n();
    check_split(n, t)?;
    let agg = g.centered();
    let law = LabelLaw::<T>::new(&[t, n - t], 6);
    let skew = |statistic: &'static str, (c_a, c_b): (T, T)| -> Result<T> {
        let w = split_weights(1, c_a, c_b);
        let var = second_moment(agg, &law, &w, &w);
        if !(var > variance_floor(g, t, c_a, c_b)) {
            return Err(Error::ZeroVariance { statistic, t });
        }
        Ok(third_moment(agg, &law, &w, &w, &w) / (var * var.sqrt()))
    };
    Ok(Skewness {
        t,
        skew_d: skew("D", d_coefficients())?,
        skew_wr: skew("W", w_coefficients(n, t, r))?,
    })
}

/// Exact null correlations of `(Z_D(s), Z_D(t))` and `(Z_{W,r}(s), Z_{W,r}(t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossCorrelation<T> {
    pub s: usize,
    pub t: usize,
    pub rho_d: T,
    pub rho_wr: T,
}

pub fn cross_correlation<T: Scalar>(
    g: &GramSummary<T>,
    s: usize,
    t: usize,
    r: T,
) -> Result<CrossCorrelation<T>> {
    let n = g.n();
    check_split(n, s)?;
    check_split(n, t)?;
    if s >= t {
        return Err(Error::InvalidConfig(format!(
            "cross-correlation needs s < t, got s = {s}, t = {t}"
        )));
    }
    let agg = g.centered_low_order();
    let law = LabelLaw::<T>::new(&[s, t - s, n - t], 4);
    let corr = |statistic: &'static str, cs: (T, T), ct: (T, T)| -> Result<T> {
        let ws = split_weights(1, cs.0, cs.1);
        let wt = split_weights(2, ct.0, ct.1);
        let vs = second_moment(agg, &law, &ws, &ws);
        let vt = second_moment(agg, &law, &wt, &wt);
        if !(vs > variance_floor(g, s, cs.0, cs.1)) {
            return Err(Error::ZeroVariance { statistic, t: s });
        }
        if !(vt > variance_floor(g, t, ct.0, ct.1)) {
            return Err(Error::ZeroVariance { statistic, t });
        }
        Ok(second_moment(agg, &law, &ws, &wt) / (vs * vt).sqrt())
    };
    Ok(CrossCorrelation {
        s,
        t,
        rho_d: corr("D", d_coefficients(), d_coefficients())?,
        rho_wr: corr("W", w_coefficients(n, s, r), w_coefficients(n, t, r))?,
    })
}

/// Every null moment of the split at `t` for one `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NullMoments<T> {
    pub t: usize,
    pub r: T,
    pub mean_alpha: T,
    pub mean_beta: T,
    pub var_alpha: T,
    pub var_beta: T,
    pub cov_ab: T,
    pub mean_d: T,
    pub var_d: T,
    pub mean_wr: T,
    pub var_wr: T,
    pub skew_d: T,
    pub skew_wr: T,
}

pub fn null_moments<T: Scalar>(g: &GramSummary<T>, t: usize, r: T) -> Result<NullMoments<T>> {
    let ab = alpha_beta_moments(g, t)?;
    let dw = dw_from_alpha_beta(&ab, g.n(), r);
    let sk = third_moments(g, t, r)?;
    Ok(NullMoments {
        t,
        r,
        mean_alpha: ab.mean_alpha,
        mean_beta: ab.mean_beta,
        var_alpha: ab.var_alpha,
        var_beta: ab.var_beta,
        cov_ab: ab.cov_ab,
        mean_d: dw.mean_d,
        var_d: dw.var_d,
        mean_wr: dw.mean_wr,
        var_wr: dw.var_wr,
        skew_d: sk.skew_d,
        skew_wr: sk.skew_wr,
    })
}

/// Asymptotic correlation of the limiting `Z_D` process, `u < v`.
pub fn rho_d_limit(u: f64, v: f64) -> f64 {
    let (u, v) = if u <= v { (u, v) } else { (v, u) };
    (u * (1.0 - v) / ((1.0 - u) * v)).sqrt()
}

/// Asymptotic correlation of the limiting `Z_{W,r}` process.
///
/// `r1` and `r2` come from [`limit_kernel_summaries`].
pub fn rho_w_limit(u: f64, v: f64, r: f64, r1: f64, r2: f64) -> f64 {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    let sigma = |x: f64| {
        (2.0 * r1 * (r * (1.0 - x) + x).powi(2)
            + (4.0 * r1 + 4.0 * r2) * x * (1.0 - x) * (r - 1.0).powi(2))
        .sqrt()
    };
    let num = 2.0
        * r1
        * (r * r * a * (1.0 - a) * (1.0 - b * b)
            + r * (b - 1.0) * (3.0 * u * v - a * a * (2.0 * b + 1.0))
            + u * v * (2.0 - a) * (1.0 - b))
        + 4.0 * r2 * u * v * (1.0 - u) * (1.0 - v) * (r - 1.0).powi(2);
    num / (b * (1.0 - a) * sigma(u) * sigma(v))
}

/// Kernel summaries consumed by [`rho_w_limit`]: the sum of squares of the
/// doubly-centered kernel, and the sum of squared centered row sums minus it,
/// both divided by `n(n-1)`.
pub fn limit_kernel_summaries<T: Scalar>(g: &GramSummary<T>) -> (f64, f64) {
    let n = g.n();
    let agg = g.centered_low_order();
    let t1 = to_f64(agg.t1_double_centered(n));
    let v = to_f64(agg.v);
    let scale = (n * (n - 1)) as f64;
    (t1 / scale, (v - t1) / scale)
}

#[cfg(test)]
mod tests;
