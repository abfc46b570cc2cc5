// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gaussian kernel matrix with the median-heuristic bandwidth, and the
//! permutation-invariant aggregates every other module reads from it.
//!
//! All row-wise work is split across rayon workers, but every reduction
//! runs in a fixed row order, so results do not depend on the pool size.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::{count, to_f64, KahanSum, Scalar};

/// Time-ordered multivariate observations, stored row-major (`n x d`).
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence<T> {
    values: Vec<T>,
    n: usize,
    d: usize,
}

impl<T: Scalar> Sequence<T> {
    /// Wraps a row-major buffer. Requires `n >= 2`, `d >= 1` and finite entries.
    pub fn new(n: usize, d: usize, values: Vec<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewObservations { n, min: 2 });
        }
        if d == 0 || values.len() != n * d {
            return Err(Error::InvalidConfig(format!(
                "buffer of length {} does not hold {n} rows of dimension {d}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { values, n, d })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::RaggedRows {
                    row,
                    got: r.len(),
                    expected: d,
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    /// Univariate convenience constructor.
    pub fn from_scalars(xs: &[T]) -> Result<Self> {
        Self::new(xs.len(), 1, xs.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Rows `start..end` as a new sequence.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        assert!(
            start <= end && end <= self.n,
            "slice {start}..{end} out of range"
        );
        Self::new(
            end - start,
            self.d,
            self.values[start * self.d..end * self.d].to_vec(),
        )
    }

    /// Rows reordered so that row `p` of the result is row `order[p]` of `self`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.n);
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.row(i));
        }
        Self {
            values,
            n: self.n,
            d: self.d,
        }
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let z = x - y;
            z * z
        })
        .fold(T::zero(), |acc, v| acc + v)
}

/// Full symmetric matrix of squared Euclidean distances (zero diagonal).
fn sq_dist_matrix<T: Scalar>(seq: &Sequence<T>) -> Vec<T> {
    let n = seq.n();
    let mut out = vec![T::zero(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let yi = seq.row(i);
        for (j, slot) in row.iter_mut().enumerate() {
            if j != i {
                *slot = sq_dist(yi, seq.row(j));
            }
        }
    });
    out
}

fn median_of<T: Scalar>(mut xs: Vec<T>) -> T {
    let m = xs.len();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite distances");
    let (left, mid, _) = xs.select_nth_unstable_by(m / 2, cmp);
    let upper = *mid;
    if m % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(T::neg_infinity(), T::max);
        (lower + upper) / count(2)
    }
}

fn median_from_sq<T: Scalar>(sq: &[T], n: usize) -> Result<T> {
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        dists.extend(sq[i * n + i + 1..(i + 1) * n].iter().map(|v| v.sqrt()));
    }
    let med = median_of(dists);
    if med <= T::zero() {
        return Err(Error::AllPointsIdentical);
    }
    Ok(med)
}

/// Median of the `n(n-1)/2` pairwise Euclidean distances.
///
/// Zero distances take part in the median; only an all-zero median errors.
pub fn median_heuristic<T: Scalar>(seq: &Sequence<T>) -> Result<T> {
    median_from_sq(&sq_dist_matrix(seq), seq.n())
}

/// Quantities of the centered kernel `kt[i][j] = (k[i][j] - kbar) * [i != j]`
/// consumed by the exact third-moment and cross-correlation formulas.
///
/// Every field is a sum over index tuples of the centered kernel:
/// `t1 = sum kt_ij^2`, `v = sum_i kt_i.^2`, `s3 = sum kt_ij^3`,
/// `a1 = sum_i kt_i. sum_j kt_ij^2`, `c3 = sum_i kt_i.^3`,
/// `f = sum_ij kt_i. kt_ij kt_j.`, `tr3 = trace(Kt^3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenteredAggregates<T> {
    pub t1: T,
    pub v: T,
    pub s3: T,
    pub a1: T,
    pub c3: T,
    pub f: T,
    pub tr3: T,
}

impl<T: Scalar> CenteredAggregates<T> {
    /// Sum of squares of the doubly-centered kernel (zero row sums).
    pub fn t1_double_centered(&self, n: usize) -> T {
        self.t1 - count::<T>(2) * self.v / count(n - 2)
    }
}

/// Kernel matrix plus cached aggregates.
///
/// `r0..r3` follow the usual permutation-moment notation:
/// `r0 = sum_{i!=j} k_ij`, `r1 = sum_{i!=j} k_ij^2`,
/// `r2 = sum over distinct (i,j,u) of k_ij k_iu`,
/// `r3 = sum over distinct (i,j,u,v) of k_ij k_uv`.
#[derive(Debug)]
pub struct GramSummary<T> {
    n: usize,
    k: Vec<T>,
    bandwidth: Option<T>,
    pub kbar: T,
    pub r0: T,
    pub r1: T,
    pub r2: T,
    pub r3: T,
    row_sums: Vec<T>,
    ktilde_rowsum: Vec<T>,
    low_order: OnceLock<CenteredAggregates<T>>,
    centered: OnceLock<CenteredAggregates<T>>,
}

impl<T: Scalar> Clone for GramSummary<T> {
    fn clone(&self) -> Self {
        let copy = |cell: &OnceLock<CenteredAggregates<T>>| {
            let out = OnceLock::new();
            if let Some(c) = cell.get() {
                let _ = out.set(*c);
            }
            out
        };
        Self {
            n: self.n,
            k: self.k.clone(),
            bandwidth: self.bandwidth,
            kbar: self.kbar,
            r0: self.r0,
            r1: self.r1,
            r2: self.r2,
            r3: self.r3,
            row_sums: self.row_sums.clone(),
            ktilde_rowsum: self.ktilde_rowsum.clone(),
            low_order: copy(&self.low_order),
            centered: copy(&self.centered),
        }
    }
}

/// Gaussian kernel `exp(-|x-y|^2 / (2 h^2))` at the given bandwidth `h`.
pub fn build_gram<T: Scalar>(seq: &Sequence<T>, bandwidth: T) -> Result<GramSummary<T>> {
    let sq = sq_dist_matrix(seq);
    gram_from_sq(sq, seq.n(), bandwidth)
}

/// Gaussian kernel with the bandwidth taken from [`median_heuristic`]
/// unless `bandwidth` overrides it.
pub fn gaussian_gram<T: Scalar>(seq: &Sequence<T>, bandwidth: Option<T>) -> Result<GramSummary<T>> {
    let sq = sq_dist_matrix(seq);
    let h = match bandwidth {
        Some(h) => h,
        None => median_from_sq(&sq, seq.n())?,
    };
    gram_from_sq(sq, seq.n(), h)
}

fn gram_from_sq<T: Scalar>(mut sq: Vec<T>, n: usize, bandwidth: T) -> Result<GramSummary<T>> {
    if !(bandwidth.is_finite() && bandwidth > T::zero()) {
        return Err(Error::InvalidBandwidth(to_f64(bandwidth)));
    }
    let denom = count::<T>(2) * bandwidth * bandwidth;
    sq.par_iter_mut().for_each(|v| *v = (-*v / denom).exp());
    let mut g = GramSummary::from_kernel(n, sq)?;
    g.bandwidth = Some(bandwidth);
    Ok(g)
}

impl<T: Scalar> GramSummary<T> {
    /// Summarizes a precomputed symmetric kernel matrix (row-major `n x n`).
    ///
    /// Diagonal entries are stored but never enter an aggregate.
    pub fn from_kernel(n: usize, k: Vec<T>) -> Result<Self> {
        if n < 4 {
            return Err(Error::TooFewObservations { n, min: 4 });
        }
        if k.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "kernel buffer of length {} is not {n} x {n}",
                k.len()
            )));
        }
        if let Some(pos) = k.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteKernel {
                row: pos / n,
                col: pos % n,
            });
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (k[i * n + j], k[j * n + i]);
                let tol = T::epsilon() * count(16) * (T::one() + a.abs().max(b.abs()));
                if (a - b).abs() > tol {
                    return Err(Error::AsymmetricKernel { row: i, col: j });
                }
            }
        }

        // Per-row compensated sums, combined in row order.
        let per_row: Vec<(T, T)> = k
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| {
                let mut s = KahanSum::new();
                let mut s2 = KahanSum::new();
                for (j, &v) in row.iter().enumerate() {
                    if j != i {
                        s.add(v);
                        s2.add(v * v);
                    }
                }
                (s.total(), s2.total())
            })
            .collect();
        let row_sums: Vec<T> = per_row.iter().map(|p| p.0).collect();
        let r0 = per_row.iter().map(|p| p.0).collect::<KahanSum<T>>().total();
        let r1 = per_row.iter().map(|p| p.1).collect::<KahanSum<T>>().total();
        let sum_row_sq = row_sums
            .iter()
            .map(|&s| s * s)
            .collect::<KahanSum<T>>()
            .total();
        let r2 = sum_row_sq - r1;
        let r3 = r0 * r0 - count::<T>(2) * r1 - count::<T>(4) * r2;
        let kbar = r0 / count(n * (n - 1));
        let shift = count::<T>(n - 1) * kbar;
        let ktilde_rowsum = row_sums.iter().map(|&s| s - shift).collect();

        Ok(Self {
            n,
            k,
            bandwidth: None,
            kbar,
            r0,
            r1,
            r2,
            r3,
            row_sums,
            ktilde_rowsum,
            low_order: OnceLock::new(),
            centered: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bandwidth the kernel was built with; `None` for user-supplied matrices.
    pub fn bandwidth(&self) -> Option<T> {
        self.bandwidth
    }

    #[inline]
    pub fn k(&self, i: usize, j: usize) -> T {
        self.k[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.k[i * self.n..(i + 1) * self.n]
    }

    pub fn matrix(&self) -> &[T] {
        &self.k
    }

    /// Off-diagonal row sums `k_i. = sum_{j != i} k_ij`.
    pub fn row_sums(&self) -> &[T] {
        &self.row_sums
    }

    /// Centered row sums `kt_i. = k_i. - (n-1) kbar`; they sum to zero.
    pub fn ktilde_rowsum(&self) -> &[T] {
        &self.ktilde_rowsum
    }

    /// Centered-kernel aggregates, computed on first use. The
    /// `trace(Kt^3)` term costs `O(n^3)`; everything else is `O(n^2)`.
    pub fn centered(&self) -> &CenteredAggregates<T> {
        self.centered.get_or_init(|| {
            let mut agg = *self.centered_low_order();
            agg.tr3 = self.trace_cubed();
            agg
        })
    }

    /// Aggregates with `tr3` left as NaN; enough for second moments.
    pub(crate) fn centered_low_order(&self) -> &CenteredAggregates<T> {
        self.low_order.get_or_init(|| self.compute_low_order())
    }

    fn centered_row(&self, i: usize, out: &mut [T]) {
        let n = self.n;
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = if j == i {
                T::zero()
            } else {
                self.k[i * n + j] - self.kbar
            };
        }
    }

    fn compute_low_order(&self) -> CenteredAggregates<T> {
        let n = self.n;
        let rs = &self.ktilde_rowsum;
        // (t1, s3, a1, f) per row
        let per_row: Vec<[T; 4]> = (0..n)
            .into_par_iter()
            .map_init(
                || vec![T::zero(); n],
                |row, i| {
                    self.centered_row(i, row);
                    let mut t1 = KahanSum::new();
                    let mut s3 = KahanSum::new();
                    let mut f = KahanSum::new();
                    for (j, &x) in row.iter().enumerate() {
                        let x2 = x * x;
                        t1.add(x2);
                        s3.add(x2 * x);
                        f.add(x * rs[j]);
                    }
                    let t1 = t1.total();
                    [t1, s3.total(), t1 * rs[i], f.total() * rs[i]]
                },
            )
            .collect();
        let col = |c: usize| {
            per_row
                .iter()
                .map(|r| r[c])
                .collect::<KahanSum<T>>()
                .total()
        };
        CenteredAggregates {
            t1: col(0),
            v: rs.iter().map(|&x| x * x).collect::<KahanSum<T>>().total(),
            s3: col(1),
            a1: col(2),
            c3: rs
                .iter()
                .map(|&x| x * x * x)
                .collect::<KahanSum<T>>()
                .total(),
            f: col(3),
            tr3: T::nan(),
        }
    }

    /// `trace(Kt^3) = 2 sum_{i<j} (Kt^2)_ij Kt_ij` (the centered diagonal is
    /// zero). Rows are processed in blocks so each streamed row of `Kt` is
    /// reused by every row of the block.
    fn trace_cubed(&self) -> T {
        const BLOCK: usize = 32;
        let n = self.n;
        let mut kt = vec![T::zero(); n * n];
        kt.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| self.centered_row(i, row));
        let kt = &kt;
        let blocks: Vec<T> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let i0 = b * BLOCK;
                let i1 = (i0 + BLOCK).min(n);
                let lo = i0 + 1;
                if lo >= n {
                    return T::zero();
                }
                let width = n - lo;
                let mut acc = vec![T::zero(); (i1 - i0) * width];
                for kk in 0..n {
                    let src = &kt[kk * n + lo..(kk + 1) * n];
                    for (r, i) in (i0..i1).enumerate() {
                        let a = kt[i * n + kk];
                        if a == T::zero() {
                            continue;
                        }
                        for (o, &v) in acc[r * width..(r + 1) * width].iter_mut().zip(src) {
                            *o = *o + a * v;
                        }
                    }
                }
                let mut sum = KahanSum::new();
                for (r, i) in (i0..i1).enumerate() {
                    // columns j > i only
                    let off = i + 1 - lo;
                    let row = &acc[r * width + off..(r + 1) * width];
                    let krow = &kt[i * n + i + 1..(i + 1) * n];
                    sum.add(
                        row.iter()
                            .zip(krow)
                            .map(|(&a, &b)| a * b)
                            .fold(T::zero(), |s, x| s + x),
                    );
                }
                sum.total()
            })
            .collect();
        count::<T>(2) * blocks.into_iter().collect::<KahanSum<T>>().total()
    }
}
