// SPDX-License-Identifier: MIT OR Apache-2.0

//! Single-split and changed-interval scans.
//!
//! Per-split null moments depend only on the group sizes, so they are
//! tabulated once in a [`ScanContext`] and reused for the observed ordering
//! and for every permuted ordering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramSummary;
use crate::moments::{
    d_coefficients, alpha_beta_moments, variance_floor, w_coefficients, AlphaBetaMoments,
};
use crate::num::{count, lit, Scalar};

/// Inclusive range `[n0, n1]` of candidate split sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanBounds {
    pub n0: usize,
    pub n1: usize,
}

impl ScanBounds {
    /// Requires `2 <= n0 <= n1 <= n - 2`.
    pub fn new(n0: usize, n1: usize, n: usize) -> Result<Self> {
        if n0 < 2 || n0 > n1 || n1 + 2 > n {
            return Err(Error::InvalidBounds { n0, n1, n });
        }
        Ok(Self { n0, n1 })
    }

    /// `n0 = max(2, floor(0.05 n))`, `n1 = n - n0`.
    pub fn default_for(n: usize) -> Result<Self> {
        let n0 = (n / 20).max(2);
        Self::new(n0, n.saturating_sub(n0), n)
    }

    pub fn len(&self) -> usize {
        self.n1 - self.n0 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.n0..=self.n1
    }
}

/// Standardization of one linear statistic `c_a A + c_b B` at one split.
#[derive(Clone, Copy, Debug)]
struct Standardizer<T> {
    c_a: T,
    c_b: T,
    mean: T,
    inv_sd: T,
    valid: bool,
}

impl<T: Scalar> Standardizer<T> {
    fn new(g: &GramSummary<T>, ab: &AlphaBetaMoments<T>, (c_a, c_b): (T, T)) -> Self {
        let (mean, var) = ab.linear(g.n(), c_a, c_b);
        let valid = var > variance_floor(g, ab.t, c_a, c_b);
        Self {
            c_a,
            c_b,
            mean,
            inv_sd: if valid {
                T::one() / var.sqrt()
            } else {
                T::zero()
            },
            valid,
        }
    }

    #[inline]
    fn raw(&self, a: T, b: T) -> T {
        self.c_a * a + self.c_b * b
    }

    #[inline]
    fn z(&self, a: T, b: T) -> T {
        if self.valid {
            (self.raw(a, b) - self.mean) * self.inv_sd
        } else {
            T::zero()
        }
    }
}

/// Null-moment tables for every split size in a scan range.
#[derive(Clone, Debug)]
pub struct ScanContext<T> {
    n: usize,
    bounds: ScanBounds,
    r_list: Vec<T>,
    moments: Vec<AlphaBetaMoments<T>>,
    d: Vec<Standardizer<T>>,
    w1: Vec<Standardizer<T>>,
    /// `w[ri][ti]`
    w: Vec<Vec<Standardizer<T>>>,
    /// Inverse covariance of `(alpha, beta)` when well conditioned.
    inv_cov: Vec<Option<[T; 3]>>,
    r0: T,
}

impl<T: Scalar> ScanContext<T> {
    /// Tabulates moments for split sizes `n0..=n1`. `r_list` may be empty;
    /// `W_1` is always tabulated because the combined statistic needs it.
    pub fn new(g: &GramSummary<T>, bounds: ScanBounds, r_list: &[T]) -> Result<Self> {
        let n = g.n();
        ScanBounds::new(bounds.n0, bounds.n1, n)?;
        let moments = bounds
            .iter()
            .map(|t| alpha_beta_moments(g, t))
            .collect::<Result<Vec<_>>>()?;
        let d = moments
            .iter()
            .map(|ab| Standardizer::new(g, ab, d_coefficients()))
            .collect();
        let w1 = moments
            .iter()
            .map(|ab| Standardizer::new(g, ab, w_coefficients(n, ab.t, T::one())))
            .collect();
        let w = r_list
            .iter()
            .map(|&r| {
                moments
                    .iter()
                    .map(|ab| Standardizer::new(g, ab, w_coefficients(n, ab.t, r)))
                    .collect()
            })
            .collect();
        let inv_cov = moments
            .iter()
            .map(|ab| {
                let det = ab.var_alpha * ab.var_beta - ab.cov_ab * ab.cov_ab;
                let scale = ab.var_alpha * ab.var_beta;
                if scale > T::zero() && det > lit::<T>(1e-14) * scale {
                    Some([ab.var_beta / det, -ab.cov_ab / det, ab.var_alpha / det])
                } else {
                    None
                }
            })
            .collect();
        Ok(Self {
            n,
            bounds,
            r_list: r_list.to_vec(),
            moments,
            d,
            w1,
            w,
            inv_cov,
            r0: g.r0,
        })
    }

    pub fn bounds(&self) -> ScanBounds {
        self.bounds
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_list(&self) -> &[T] {
        &self.r_list
    }

    /// Null moments of `(alpha, beta)` for split size `t`.
    pub fn moments(&self, t: usize) -> &AlphaBetaMoments<T> {
        &self.moments[t - self.bounds.n0]
    }

    #[inline]
    fn idx(&self, t: usize) -> usize {
        t - self.bounds.n0
    }

    /// Neither `D` nor `W_1` has positive null variance.
    fn excluded(&self, i: usize) -> bool {
        !(self.d[i].valid || self.w1[i].valid)
    }

    /// Exactly one of `D`, `W_1` is degenerate; the combined statistic is
    /// the square of the other one.
    fn reduced(&self, i: usize) -> bool {
        self.d[i].valid != self.w1[i].valid
    }

    fn z_gkcp(&self, i: usize, a: T, b: T) -> T {
        if self.excluded(i) {
            return T::zero();
        }
        let zd = self.d[i].z(a, b);
        let zw = self.w1[i].z(a, b);
        zd * zd + zw * zw
    }

    fn mahalanobis(&self, i: usize, t: usize, a: T, b: T) -> T {
        match self.inv_cov[i] {
            Some([p, q, s]) if !self.reduced(i) => {
                let ab = &self.moments[i];
                let x = a / count(t * (t - 1)) - ab.mean_alpha;
                let y = b / count((self.n - t) * (self.n - t - 1)) - ab.mean_beta;
                p * x * x + count::<T>(2) * q * x * y + s * y * y
            }
            _ => self.z_gkcp(i, a, b),
        }
    }
}

/// Within-group ordered-pair totals `A(t)`, `B(t)` for `t = 0..=n` under the
/// ordering `order` (identity if `None`).
pub(crate) fn within_totals<T: Scalar>(
    g: &GramSummary<T>,
    order: Option<&[usize]>,
) -> (Vec<T>, Vec<T>) {
    let n = g.n();
    let at = |p: usize| order.map_or(p, |o| o[p]);
    let two = count::<T>(2);
    // s_p = sum_{q < p} k(pi_p, pi_q)
    let mut a = vec![T::zero(); n + 1];
    let mut later = vec![T::zero(); n];
    for p in 0..n {
        let ip = at(p);
        let row = g.row(ip);
        let s = (0..p).map(|q| row[at(q)]).fold(T::zero(), |x, y| x + y);
        a[p + 1] = a[p] + two * s;
        later[p] = g.row_sums()[ip] - s;
    }
    let mut b = vec![T::zero(); n + 1];
    for p in (0..n).rev() {
        b[p] = b[p + 1] + two * later[p];
    }
    (a, b)
}

/// Per-split values over the scan range.
#[derive(Clone, Debug, Serialize)]
pub struct ScanProfile<T> {
    pub bounds: ScanBounds,
    pub t: Vec<usize>,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub gamma_cross: Vec<T>,
    pub d: Vec<T>,
    pub z_d: Vec<T>,
    pub z_w1: Vec<T>,
    pub r_list: Vec<T>,
    /// `w[ri][ti]` for each `r` in `r_list`.
    pub w: Vec<Vec<T>>,
    pub z_w: Vec<Vec<T>>,
    /// `Z_D^2 + Z_{W,1}^2`.
    pub gkcp: Vec<T>,
    /// Mahalanobis form of the same quantity.
    pub gkcp_mahalanobis: Vec<T>,
    /// Splits where both `D` and `W_1` have zero null variance.
    pub excluded: Vec<bool>,
    /// Splits where exactly one of them does; `gkcp` is then the square of
    /// the other standardized statistic.
    pub reduced: Vec<bool>,
    pub argmax_t: usize,
    pub max_gkcp: T,
}

impl<T: Scalar> ScanProfile<T> {
    pub fn max_abs_zd(&self) -> T {
        self.z_d.iter().fold(T::zero(), |m, z| m.max(z.abs()))
    }

    /// Maximum of `Z_{W,r}` for the `ri`-th configured `r`.
    pub fn max_zw(&self, ri: usize) -> T {
        self.z_w[ri]
            .iter()
            .fold(T::neg_infinity(), |m, &z| m.max(z))
    }

    /// Index of `r` in `r_list`, matched to within 1e-9.
    pub fn r_index(&self, r: f64) -> Option<usize> {
        self.r_list
            .iter()
            .position(|&x| (crate::num::to_f64(x) - r).abs() < 1e-9)
    }
}

fn argmax<T: Scalar>(values: &[T], skip: &[bool]) -> (usize, T) {
    let mut best = (0, T::neg_infinity());
    for (i, (&v, &s)) in values.iter().zip(skip).enumerate() {
        if !s && v > best.1 {
            best = (i, v);
        }
    }
    if best.1 == T::neg_infinity() {
        (0, T::zero())
    } else {
        best
    }
}

/// Scans every split in `bounds` with the ordering of `g`.
pub fn scan_single<T: Scalar>(g: &GramSummary<T>, ctx: &ScanContext<T>) -> ScanProfile<T> {
    let n = g.n();
    let (a_tot, b_tot) = within_totals(g, None);
    let bounds = ctx.bounds;
    let len = bounds.len();
    let mut p = ScanProfile {
        bounds,
        t: bounds.iter().collect(),
        alpha: Vec::with_capacity(len),
        beta: Vec::with_capacity(len),
        gamma_cross: Vec::with_capacity(len),
        d: Vec::with_capacity(len),
        z_d: Vec::with_capacity(len),
        z_w1: Vec::with_capacity(len),
        r_list: ctx.r_list.clone(),
        w: vec![Vec::with_capacity(len); ctx.r_list.len()],
        z_w: vec![Vec::with_capacity(len); ctx.r_list.len()],
        gkcp: Vec::with_capacity(len),
        gkcp_mahalanobis: Vec::with_capacity(len),
        excluded: Vec::with_capacity(len),
        reduced: Vec::with_capacity(len),
        argmax_t: bounds.n0,
        max_gkcp: T::zero(),
    };
    for t in bounds.iter() {
        let i = ctx.idx(t);
        let (a, b) = (a_tot[t], b_tot[t]);
        p.alpha.push(a / count(t * (t - 1)));
        p.beta.push(b / count((n - t) * (n - t - 1)));
        let cross = (ctx.r0 - a - b) / count(2);
        p.gamma_cross.push(cross / count(t * (n - t)));
        p.d.push(ctx.d[i].raw(a, b));
        p.z_d.push(ctx.d[i].z(a, b));
        p.z_w1.push(ctx.w1[i].z(a, b));
        for (ri, std) in ctx.w.iter().enumerate() {
            p.w[ri].push(std[i].raw(a, b));
            p.z_w[ri].push(std[i].z(a, b));
        }
        let excluded = ctx.excluded(i);
        p.excluded.push(excluded);
        p.reduced.push(ctx.reduced(i));
        p.gkcp.push(ctx.z_gkcp(i, a, b));
        p.gkcp_mahalanobis.push(if excluded {
            T::zero()
        } else {
            ctx.mahalanobis(i, t, a, b)
        });
    }
    let (i, v) = argmax(&p.gkcp, &p.excluded);
    p.argmax_t = bounds.n0 + i;
    p.max_gkcp = v;
    p
}

/// Maxima of the scan statistics for one ordering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanMaxima<T> {
    pub gkcp: T,
    pub abs_zd: T,
    /// One entry per configured `r`.
    pub zw: Vec<T>,
}

/// Maxima of the single-split scan under the ordering `order`.
pub fn scan_maxima<T: Scalar>(
    g: &GramSummary<T>,
    ctx: &ScanContext<T>,
    order: Option<&[usize]>,
) -> ScanMaxima<T> {
    let (a_tot, b_tot) = within_totals(g, order);
    let mut m = ScanMaxima {
        gkcp: T::zero(),
        abs_zd: T::zero(),
        zw: vec![T::neg_infinity(); ctx.w.len()],
    };
    for t in ctx.bounds.iter() {
        let i = ctx.idx(t);
        let (a, b) = (a_tot[t], b_tot[t]);
        m.gkcp = m.gkcp.max(ctx.z_gkcp(i, a, b));
        m.abs_zd = m.abs_zd.max(ctx.d[i].z(a, b).abs());
        for (slot, std) in m.zw.iter_mut().zip(&ctx.w) {
            *slot = slot.max(std[i].z(a, b));
        }
    }
    m
}

/// Changed-interval scan over all `(t1, t2]` with `n0 <= t2 - t1 <= n1`.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalScanProfile<T> {
    pub bounds: ScanBounds,
    pub t1: Vec<usize>,
    pub t2: Vec<usize>,
    pub z_d: Vec<T>,
    pub z_w1: Vec<T>,
    pub r_list: Vec<T>,
    pub z_w: Vec<Vec<T>>,
    pub gkcp: Vec<T>,
    pub excluded: Vec<bool>,
    pub argmax: (usize, usize),
    pub max_gkcp: T,
}

impl<T: Scalar> IntervalScanProfile<T> {
    pub fn max_abs_zd(&self) -> T {
        self.z_d.iter().fold(T::zero(), |m, z| m.max(z.abs()))
    }

    pub fn max_zw(&self, ri: usize) -> T {
        self.z_w[ri]
            .iter()
            .fold(T::neg_infinity(), |m, &z| m.max(z))
    }
}

/// `(n+1) x (n+1)` prefix sums of the off-diagonal kernel under `order`,
/// plus prefix sums of the off-diagonal row totals.
struct Prefix<T> {
    n: usize,
    p: Vec<T>,
    rows: Vec<T>,
}

impl<T: Scalar> Prefix<T> {
    fn new(g: &GramSummary<T>, order: Option<&[usize]>) -> Self {
        let n = g.n();
        let at = |p: usize| order.map_or(p, |o| o[p]);
        let w = n + 1;
        let mut p = vec![T::zero(); w * w];
        for i in 0..n {
            let row = g.row(at(i));
            let mut run = T::zero();
            for j in 0..n {
                if j != i {
                    run = run + row[at(j)];
                }
                p[(i + 1) * w + j + 1] = p[i * w + j + 1] + run;
            }
        }
        let mut rows = vec![T::zero(); w];
        for i in 0..n {
            rows[i + 1] = rows[i] + g.row_sums()[at(i)];
        }
        Self { n, p, rows }
    }

    /// Ordered-pair total within positions `[lo, hi)`.
    #[inline]
    fn block(&self, lo: usize, hi: usize) -> T {
        let w = self.n + 1;
        self.p[hi * w + hi] - self.p[lo * w + hi] - self.p[hi * w + lo] + self.p[lo * w + lo]
    }
}

/// Inside/outside totals `(A, B)` for the interval `(t1, t2]`.
#[inline]
fn interval_totals<T: Scalar>(pre: &Prefix<T>, r0: T, t1: usize, t2: usize) -> (T, T) {
    let a = pre.block(t1, t2);
    let rs = pre.rows[t2] - pre.rows[t1];
    (a, r0 + a - count::<T>(2) * rs)
}

fn intervals(n: usize, bounds: ScanBounds) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |t1| (t1 + bounds.n0..=(t1 + bounds.n1).min(n)).map(move |t2| (t1, t2)))
}

/// Scans every interval; moments reuse the split tables at `m = t2 - t1`.
pub fn scan_interval<T: Scalar>(
    g: &GramSummary<T>,
    ctx: &ScanContext<T>,
) -> IntervalScanProfile<T> {
    let n = g.n();
    let pre = Prefix::new(g, None);
    let mut p = IntervalScanProfile {
        bounds: ctx.bounds,
        t1: Vec::new(),
        t2: Vec::new(),
        z_d: Vec::new(),
        z_w1: Vec::new(),
        r_list: ctx.r_list.clone(),
        z_w: vec![Vec::new(); ctx.r_list.len()],
        gkcp: Vec::new(),
        excluded: Vec::new(),
        argmax: (0, ctx.bounds.n0),
        max_gkcp: T::zero(),
    };
    for (t1, t2) in intervals(n, ctx.bounds) {
        let i = ctx.idx(t2 - t1);
        let (a, b) = interval_totals(&pre, ctx.r0, t1, t2);
        p.t1.push(t1);
        p.t2.push(t2);
        p.z_d.push(ctx.d[i].z(a, b));
        p.z_w1.push(ctx.w1[i].z(a, b));
        for (ri, std) in ctx.w.iter().enumerate() {
            p.z_w[ri].push(std[i].z(a, b));
        }
        p.excluded.push(ctx.excluded(i));
        p.gkcp.push(ctx.z_gkcp(i, a, b));
    }
    let (k, v) = argmax(&p.gkcp, &p.excluded);
    if !p.t1.is_empty() {
        p.argmax = (p.t1[k], p.t2[k]);
    }
    p.max_gkcp = v;
    p
}

/// Maxima of the interval scan under the ordering `order`.
pub fn interval_maxima<T: Scalar>(
    g: &GramSummary<T>,
    ctx: &ScanContext<T>,
    order: Option<&[usize]>,
) -> ScanMaxima<T> {
    let pre = Prefix::new(g, order);
    let mut m = ScanMaxima {
        gkcp: T::zero(),
        abs_zd: T::zero(),
        zw: vec![T::neg_infinity(); ctx.w.len()],
    };
    for (t1, t2) in intervals(g.n(), ctx.bounds) {
        let i = ctx.idx(t2 - t1);
        let (a, b) = interval_totals(&pre, ctx.r0, t1, t2);
        m.gkcp = m.gkcp.max(ctx.z_gkcp(i, a, b));
        m.abs_zd = m.abs_zd.max(ctx.d[i].z(a, b).abs());
        for (slot, std) in m.zw.iter_mut().zip(&ctx.w) {
            *slot = slot.max(std[i].z(a, b));
        }
    }
    m
}

/// Unbiased squared MMD between the two sides of each split.
pub fn mmd_u_scan<T: Scalar>(g: &GramSummary<T>, bounds: ScanBounds) -> Result<Vec<T>> {
    let n = g.n();
    ScanBounds::new(bounds.n0, bounds.n1, n)?;
    let (a_tot, b_tot) = within_totals(g, None);
    Ok(bounds
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&t| {
            let (a, b) = (a_tot[t], b_tot[t]);
            let alpha = a / count(t * (t - 1));
            let beta = b / count((n - t) * (n - t - 1));
            let gamma = (g.r0 - a - b) / count(2 * t * (n - t));
            alpha + beta - count::<T>(2) * gamma
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::{gaussian_gram, Sequence};
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(n: usize, d: usize, seed: u64) -> Sequence<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * d)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        Sequence::new(n, d, v).unwrap()
    }

    fn gram(n: usize, seed: u64) -> GramSummary<f64> {
        gaussian_gram(&random_seq(n, 3, seed), None).unwrap()
    }

    #[test]
    fn bounds_defaults_and_validation() {
        assert_eq!(
            ScanBounds::default_for(200).unwrap(),
            ScanBounds { n0: 10, n1: 190 }
        );
        assert_eq!(
            ScanBounds::default_for(30).unwrap(),
            ScanBounds { n0: 2, n1: 28 }
        );
        assert!(ScanBounds::new(1, 5, 10).is_err());
        assert!(ScanBounds::new(6, 5, 10).is_err());
        assert!(ScanBounds::new(2, 9, 10).is_err());
    }

    #[test]
    fn split_values_match_direct_sums() {
        let n = 8;
        let g = gram(n, 1);
        let ctx = ScanContext::new(&g, ScanBounds::new(2, 6, n).unwrap(), &[1.2]).unwrap();
        let p = scan_single(&g, &ctx);
        for (i, t) in p.t.iter().enumerate() {
            let (a, b, c) = oracle::direct_split(g.matrix(), n, *t);
            assert!((p.alpha[i] - a).abs() < 1e-12);
            assert!((p.beta[i] - b).abs() < 1e-12);
            assert!((p.gamma_cross[i] - c).abs() < 1e-12);
        }
    }

    #[test]
    fn mahalanobis_equals_z_form() {
        let n = 8;
        let g = gram(n, 2);
        let ctx = ScanContext::new(&g, ScanBounds::new(2, 6, n).unwrap(), &[]).unwrap();
        let p = scan_single(&g, &ctx);
        for (m, z) in p.gkcp_mahalanobis.iter().zip(&p.gkcp) {
            assert!((m - z).abs() <= 1e-8 * z.max(1.0));
        }
    }

    #[test]
    fn separated_halves_peak_at_midpoint() {
        let n = 20;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if i < n / 2 {
                    vec![0.0, 0.0]
                } else {
                    vec![1.0, 1.0]
                }
            })
            .collect();
        let g = gaussian_gram(&Sequence::from_rows(&rows).unwrap(), Some(1.0)).unwrap();
        let ctx = ScanContext::new(&g, ScanBounds::default_for(n).unwrap(), &[]).unwrap();
        let p = scan_single(&g, &ctx);
        // constant row sums: D is degenerate, W_1 carries the signal
        assert!(p.reduced.iter().all(|&r| r));
        assert_eq!(p.argmax_t, n / 2);
        let top = p.gkcp.iter().cloned().fold(0.0, f64::max);
        assert_eq!(p.max_gkcp, top);
    }

    #[test]
    fn maxima_agree_with_profile() {
        let n = 30;
        let g = gram(n, 3);
        let ctx = ScanContext::new(&g, ScanBounds::default_for(n).unwrap(), &[1.2, 0.8]).unwrap();
        let p = scan_single(&g, &ctx);
        let m = scan_maxima(&g, &ctx, None);
        assert!((m.gkcp - p.max_gkcp).abs() < 1e-10);
        assert!((m.abs_zd - p.max_abs_zd()).abs() < 1e-10);
        assert!((m.zw[1] - p.max_zw(1)).abs() < 1e-10);
    }

    #[test]
    fn permuted_totals_match_reordered_gram() {
        let n = 12;
        let seq = random_seq(n, 2, 4);
        let g = gaussian_gram(&seq, Some(0.7)).unwrap();
        let order: Vec<usize> = (0..n).rev().collect();
        let g2 = gaussian_gram(&seq.reordered(&order), Some(0.7)).unwrap();
        let (a1, b1) = within_totals(&g, Some(&order));
        let (a2, b2) = within_totals(&g2, None);
        for t in 0..=n {
            assert!((a1[t] - a2[t]).abs() < 1e-12 && (b1[t] - b2[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_values_match_direct_sums() {
        let n = 8;
        let g = gram(n, 5);
        let ctx = ScanContext::new(&g, ScanBounds::new(2, 6, n).unwrap(), &[]).unwrap();
        let pre = Prefix::new(&g, None);
        for (t1, t2) in intervals(n, ctx.bounds) {
            let (a, b) = interval_totals(&pre, g.r0, t1, t2);
            let m = t2 - t1;
            let (da, db) = oracle::direct_interval(g.matrix(), n, t1, t2);
            assert!((a / (m * (m - 1)) as f64 - da).abs() < 1e-12);
            assert!((b / ((n - m) * (n - m - 1)) as f64 - db).abs() < 1e-12);
        }
    }

    #[test]
    fn leading_interval_reduces_to_split() {
        let n = 16;
        let g = gram(n, 6);
        let ctx = ScanContext::new(&g, ScanBounds::new(3, 13, n).unwrap(), &[1.2]).unwrap();
        let s = scan_single(&g, &ctx);
        let iv = scan_interval(&g, &ctx);
        for k in 0..iv.t1.len() {
            if iv.t1[k] == 0 {
                let i = iv.t2[k] - 3;
                assert!((iv.gkcp[k] - s.gkcp[i]).abs() < 1e-10);
                assert!((iv.z_w[0][k] - s.z_w[0][i]).abs() < 1e-10);
            }
        }
        let m = interval_maxima(&g, &ctx, None);
        assert!((m.gkcp - iv.max_gkcp).abs() < 1e-12);
    }

    #[test]
    fn interval_statistic_depends_on_membership_only() {
        let n = 14;
        let seq = random_seq(n, 2, 7);
        let g = gaussian_gram(&seq, Some(0.8)).unwrap();
        let ctx = ScanContext::new(&g, ScanBounds::new(3, 10, n).unwrap(), &[]).unwrap();
        let (t1, t2) = (4, 9);
        let base = interval_totals(&Prefix::new(&g, None), g.r0, t1, t2);
        // shuffle inside the interval and outside it separately
        let mut order: Vec<usize> = (0..n).collect();
        order[t1..t2].reverse();
        order.swap(0, 12);
        order.swap(1, 10);
        let moved = interval_totals(&Prefix::new(&g, Some(&order)), g.r0, t1, t2);
        assert!((base.0 - moved.0).abs() < 1e-12 && (base.1 - moved.1).abs() < 1e-12);
        let _ = ctx;
    }

    #[test]
    fn planted_interval_follows_rotation() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        for row in rows.iter_mut().take(35).skip(20) {
            for v in row.iter_mut() {
                *v += 3.0;
            }
        }
        let seq = Sequence::from_rows(&rows).unwrap();
        let bounds = ScanBounds::new(5, 30, n).unwrap();
        let g = gaussian_gram(&seq, None).unwrap();
        let ctx = ScanContext::new(&g, bounds, &[]).unwrap();
        assert_eq!(scan_interval(&g, &ctx).argmax, (20, 35));
        let shift = 7;
        let order: Vec<usize> = (0..n).map(|i| (i + n - shift) % n).collect();
        let g2 = gaussian_gram(&seq.reordered(&order), None).unwrap();
        let ctx2 = ScanContext::new(&g2, bounds, &[]).unwrap();
        assert_eq!(scan_interval(&g2, &ctx2).argmax, (20 + shift, 35 + shift));
    }

    #[test]
    fn mmd_matches_direct_definition() {
        let n = 8;
        let g = gram(n, 9);
        let bounds = ScanBounds::new(2, 6, n).unwrap();
        let m = mmd_u_scan(&g, bounds).unwrap();
        for (i, t) in bounds.iter().enumerate() {
            let (a, b, c) = oracle::direct_split(g.matrix(), n, t);
            assert!((m[i] - (a + b - 2.0 * c)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_kernel_excludes_everything() {
        let n = 10;
        let mut k = vec![0.4; n * n];
        for i in 0..n {
            k[i * n + i] = 1.0;
        }
        let g = GramSummary::from_kernel(n, k).unwrap();
        let ctx = ScanContext::new(&g, ScanBounds::default_for(n).unwrap(), &[]).unwrap();
        let p = scan_single(&g, &ctx);
        assert!(p.excluded.iter().all(|&e| e));
        assert_eq!(p.max_gkcp, 0.0);
        assert!(mmd_u_scan(&g, ctx.bounds())
            .unwrap()
            .iter()
            .all(|v: &f64| v.abs() < 1e-14));
    }

    #[test]
    fn separated_clouds_peak_mmd_at_split() {
        let n = 24;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![if i < 9 { 0.0 } else { 5.0 } + 0.01 * i as f64])
            .collect();
        let g = gaussian_gram(&Sequence::from_rows(&rows).unwrap(), None).unwrap();
        let bounds = ScanBounds::default_for(n).unwrap();
        let m = mmd_u_scan(&g, bounds).unwrap();
        let best = (0..m.len())
            .max_by(|&a, &b| m[a].partial_cmp(&m[b]).unwrap())
            .unwrap();
        assert_eq!(bounds.n0 + best, 9);
    }
}
