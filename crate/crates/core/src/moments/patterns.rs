// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact joint moments of pairwise label statistics under random relabeling.
//!
//! A statistic here has the form `X = sum_{i != j} kt_ij w(g_i, g_j)` where
//! `kt` is the centered kernel, `g` is a uniformly random assignment of `K`
//! group labels with fixed group sizes, and `w` is a symmetric `K x K` weight
//! table. Since `kt` sums to zero, `E[X] = 0`.
//!
//! A product of `m` such statistics is a sum over `m` ordered index pairs.
//! Grouping the `2m` index slots by which of them coincide gives a set
//! partition; each block is one distinct observation. The contribution of a
//! partition factors into
//!
//! * a kernel sum over injective assignments of observations to blocks, which
//!   depends only on the isomorphism class of the induced multigraph and is
//!   evaluated from [`CenteredAggregates`], and
//! * the expectation of the weight product over the labels of that many
//!   distinct observations, a falling-factorial ratio per label tuple.

use std::sync::OnceLock;

use crate::gram::CenteredAggregates;
use crate::num::{falling, Scalar};

/// Largest number of label groups supported.
pub(crate) const MAX_GROUPS: usize = 3;

/// Symmetric weight table on group labels.
pub(crate) type Weights<T> = [[T; MAX_GROUPS]; MAX_GROUPS];

/// Isomorphism classes of edge multigraphs with two or three edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    // two edges
    Double,
    Path2,
    TwoDisjoint,
    // three edges
    Triple,
    DoubleAdjacent,
    DoubleDisjoint,
    Triangle,
    Path3,
    Star,
    Path2PlusEdge,
    ThreeDisjoint,
}

#[derive(Clone, Debug)]
struct SlotPattern {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    shape: Shape,
}

/// Restricted growth strings of length `len`: one per set partition.
fn set_partitions(len: usize) -> Vec<Vec<usize>> {
    fn extend(cur: &mut Vec<usize>, max: usize, len: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let next_max = if cur.is_empty() { 0 } else { max + 1 };
        for b in 0..=next_max {
            cur.push(b);
            let m = if cur.len() == 1 { 0 } else { max.max(b) };
            extend(cur, m, len, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(len), 0, len, &mut out);
    out
}

fn classify(vertices: usize, edges: &[(usize, usize)]) -> Shape {
    let norm = |e: &(usize, usize)| (e.0.min(e.1), e.0.max(e.1));
    let has_repeat =
        (0..edges.len()).any(|a| (a + 1..edges.len()).any(|b| norm(&edges[a]) == norm(&edges[b])));
    let mut degree = vec![0usize; vertices];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    match (edges.len(), vertices) {
        (2, 2) => Shape::Double,
        (2, 3) => Shape::Path2,
        (2, 4) => Shape::TwoDisjoint,
        (3, 2) => Shape::Triple,
        (3, 3) if has_repeat => Shape::DoubleAdjacent,
        (3, 3) => Shape::Triangle,
        (3, 4) if has_repeat => Shape::DoubleDisjoint,
        (3, 4) if max_deg == 3 => Shape::Star,
        (3, 4) => Shape::Path3,
        (3, 5) => Shape::Path2PlusEdge,
        (3, 6) => Shape::ThreeDisjoint,
        _ => unreachable!(
            "no multigraph with {} edges on {vertices} vertices",
            edges.len()
        ),
    }
}

fn build_patterns(n_edges: usize) -> Vec<SlotPattern> {
    set_partitions(2 * n_edges)
        .into_iter()
        .filter_map(|rgs| {
            let edges: Vec<(usize, usize)> =
                (0..n_edges).map(|m| (rgs[2 * m], rgs[2 * m + 1])).collect();
            if edges.iter().any(|&(a, b)| a == b) {
                return None;
            }
            let vertices = rgs.iter().copied().max().unwrap_or(0) + 1;
            let shape = classify(vertices, &edges);
            Some(SlotPattern {
                vertices,
                edges,
                shape,
            })
        })
        .collect()
}

fn patterns(n_edges: usize) -> &'static [SlotPattern] {
    static TWO: OnceLock<Vec<SlotPattern>> = OnceLock::new();
    static THREE: OnceLock<Vec<SlotPattern>> = OnceLock::new();
    match n_edges {
        2 => TWO.get_or_init(|| build_patterns(2)),
        3 => THREE.get_or_init(|| build_patterns(3)),
        _ => unreachable!(),
    }
}

/// Kernel sum over injective vertex assignments for each multigraph class.
fn shape_sum<T: Scalar>(shape: Shape, a: &CenteredAggregates<T>) -> T {
    let c = |x: f64| -> T { crate::num::lit(x) };
    match shape {
        Shape::Double => a.t1,
        Shape::Path2 => a.v - a.t1,
        Shape::TwoDisjoint => c(2.0) * a.t1 - c(4.0) * a.v,
        Shape::Triple => a.s3,
        Shape::DoubleAdjacent => a.a1 - a.s3,
        Shape::DoubleDisjoint => c(2.0) * a.s3 - c(4.0) * a.a1,
        Shape::Triangle => a.tr3,
        Shape::Path3 => a.f - c(2.0) * a.a1 - a.tr3 + a.s3,
        Shape::Star => a.c3 - c(3.0) * a.a1 + c(2.0) * a.s3,
        Shape::Path2PlusEdge => {
            c(10.0) * a.a1 - c(4.0) * a.f - c(2.0) * a.c3 - c(4.0) * a.s3 + c(2.0) * a.tr3
        }
        Shape::ThreeDisjoint => {
            c(16.0) * a.c3 + c(24.0) * a.f - c(48.0) * a.a1 + c(16.0) * a.s3 - c(8.0) * a.tr3
        }
    }
}

/// Joint law of the labels of up to six distinct observations.
pub(crate) struct LabelLaw<T> {
    groups: usize,
    /// `probs[m][code]`: probability that `m` given distinct observations
    /// carry the labels encoded base-`groups` in `code`.
    probs: Vec<Vec<T>>,
}

impl<T: Scalar> LabelLaw<T> {
    /// Group sizes must sum to `n`; at most [`MAX_GROUPS`] groups.
    pub(crate) fn new(sizes: &[usize], max_items: usize) -> Self {
        let groups = sizes.len();
        assert!((1..=MAX_GROUPS).contains(&groups));
        let n: usize = sizes.iter().sum();
        let mut probs = Vec::with_capacity(max_items + 1);
        for m in 0..=max_items {
            let total = groups.pow(m as u32);
            let denom: T = falling(n, m);
            let mut row = Vec::with_capacity(total);
            for code in 0..total {
                let mut tally = [0usize; MAX_GROUPS];
                let mut c = code;
                for _ in 0..m {
                    tally[c % groups] += 1;
                    c /= groups;
                }
                let num =
                    (0..groups).fold(T::one(), |acc, g| acc * falling::<T>(sizes[g], tally[g]));
                row.push(if denom == T::zero() {
                    T::zero()
                } else {
                    num / denom
                });
            }
            probs.push(row);
        }
        Self { groups, probs }
    }

    fn expect(&self, pattern: &SlotPattern, weights: &[&Weights<T>]) -> T {
        let mut labels = [0usize; 6];
        let mut acc = T::zero();
        for (code, &p) in self.probs[pattern.vertices].iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            let mut c = code;
            for slot in labels.iter_mut().take(pattern.vertices) {
                *slot = c % self.groups;
                c /= self.groups;
            }
            let prod = pattern
                .edges
                .iter()
                .zip(weights)
                .fold(T::one(), |acc, (&(a, b), w)| acc * w[labels[a]][labels[b]]);
            acc = acc + p * prod;
        }
        acc
    }
}

/// One representative pattern per shape with its multiplicity. Valid when
/// every edge carries the same weight table: the label law is exchangeable,
/// so isomorphic patterns have equal expectations.
fn shape_classes(n_edges: usize) -> &'static [(SlotPattern, usize)] {
    fn build(n_edges: usize) -> Vec<(SlotPattern, usize)> {
        let mut out: Vec<(SlotPattern, usize)> = Vec::new();
        for pat in patterns(n_edges) {
            match out.iter_mut().find(|(rep, _)| rep.shape == pat.shape) {
                Some((_, count)) => *count += 1,
                None => out.push((pat.clone(), 1)),
            }
        }
        out
    }
    static TWO: OnceLock<Vec<(SlotPattern, usize)>> = OnceLock::new();
    static THREE: OnceLock<Vec<(SlotPattern, usize)>> = OnceLock::new();
    match n_edges {
        2 => TWO.get_or_init(|| build(2)),
        3 => THREE.get_or_init(|| build(3)),
        _ => unreachable!(),
    }
}

fn moment<T: Scalar>(agg: &CenteredAggregates<T>, law: &LabelLaw<T>, weights: &[&Weights<T>]) -> T {
    if weights.iter().all(|w| *w == weights[0]) {
        return shape_classes(weights.len())
            .iter()
            .map(|(pat, count)| {
                crate::num::count::<T>(*count)
                    * shape_sum(pat.shape, agg)
                    * law.expect(pat, weights)
            })
            .fold(T::zero(), |a, b| a + b);
    }
    patterns(weights.len())
        .iter()
        .map(|pat| shape_sum(pat.shape, agg) * law.expect(pat, weights))
        .fold(T::zero(), |a, b| a + b)
}

/// `E[X1 X2]` for two pairwise label statistics sharing one labeling.
pub(crate) fn second_moment<T: Scalar>(
    agg: &CenteredAggregates<T>,
    law: &LabelLaw<T>,
    w1: &Weights<T>,
    w2: &Weights<T>,
) -> T {
    moment(agg, law, &[w1, w2])
}

/// `E[X1 X2 X3]` for three pairwise label statistics sharing one labeling.
pub(crate) fn third_moment<T: Scalar>(
    agg: &CenteredAggregates<T>,
    law: &LabelLaw<T>,
    w1: &Weights<T>,
    w2: &Weights<T>,
    w3: &Weights<T>,
) -> T {
    moment(agg, law, &[w1, w2, w3])
}

/// Weight table of `c_first * (within-first-group sum) + c_second * (within-second-group sum)`
/// where the first group is the union of labels `< boundary`.
pub(crate) fn split_weights<T: Scalar>(boundary: usize, c_first: T, c_second: T) -> Weights<T> {
    let mut w = [[T::zero(); MAX_GROUPS]; MAX_GROUPS];
    for (x, row) in w.iter_mut().enumerate() {
        for (y, slot) in row.iter_mut().enumerate() {
            *slot = match (x < boundary, y < boundary) {
                (true, true) => c_first,
                (false, false) => c_second,
                _ => T::zero(),
            };
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (len, &b) in bell.iter().enumerate().skip(1) {
            assert_eq!(set_partitions(len).len(), b);
        }
    }

    #[test]
    fn valid_pattern_counts() {
        // 4 slots: 2 + 4 + 1; exhaustively checked against brute force below.
        assert_eq!(patterns(2).len(), 7);
        let brute = set_partitions(6)
            .iter()
            .filter(|r| r[0] != r[1] && r[2] != r[3] && r[4] != r[5])
            .count();
        assert_eq!(patterns(3).len(), brute);
    }

    #[test]
    fn shape_sums_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let n = 7;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut m = vec![0.0f64; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.random::<f64>() - 0.5;
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        // center so the total is zero, as for the centered kernel
        let mean: f64 = m.iter().sum::<f64>() / (n * (n - 1)) as f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[i * n + j] -= mean;
                }
            }
        }
        let kt = |i: usize, j: usize| m[i * n + j];
        let rs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| kt(i, j)).sum()).collect();
        let mut agg = CenteredAggregates {
            t1: 0.0,
            v: rs.iter().map(|x| x * x).sum(),
            s3: 0.0,
            a1: 0.0,
            c3: rs.iter().map(|x| x * x * x).sum(),
            f: 0.0,
            tr3: 0.0,
        };
        for i in 0..n {
            for j in 0..n {
                agg.t1 += kt(i, j).powi(2);
                agg.s3 += kt(i, j).powi(3);
                agg.a1 += kt(i, j).powi(2) * rs[i];
                agg.f += rs[i] * kt(i, j) * rs[j];
                for l in 0..n {
                    agg.tr3 += kt(i, j) * kt(j, l) * kt(l, i);
                }
            }
        }
        for n_edges in [2usize, 3] {
            for pat in patterns(n_edges) {
                let v = pat.vertices;
                let mut brute = 0.0;
                let mut idx = vec![0usize; v];
                loop {
                    let distinct = (0..v).all(|a| (a + 1..v).all(|b| idx[a] != idx[b]));
                    if distinct {
                        brute += pat
                            .edges
                            .iter()
                            .map(|&(a, b)| kt(idx[a], idx[b]))
                            .product::<f64>();
                    }
                    let mut p = 0;
                    loop {
                        if p == v {
                            break;
                        }
                        idx[p] += 1;
                        if idx[p] < n {
                            break;
                        }
                        idx[p] = 0;
                        p += 1;
                    }
                    if p == v {
                        break;
                    }
                }
                let got = shape_sum(pat.shape, &agg);
                assert!(
                    (got - brute).abs() < 1e-10,
                    "{:?}: formula {got} vs brute {brute}",
                    pat.shape
                );
            }
        }
    }

    #[test]
    fn shape_grouping_matches_pattern_sum() {
        let mut k = vec![0.0; 81];
        for i in 0..9 {
            for j in 0..9 {
                k[i * 9 + j] = ((i * 7 + j * 7 + i * j) % 11) as f64 / 11.0;
            }
        }
        let g = crate::gram::GramSummary::from_kernel(9, k).unwrap();
        let agg = g.centered();
        let law = LabelLaw::<f64>::new(&[4, 5], 6);
        let w = split_weights(1, 1.3, -0.7);
        for edges in [2, 3] {
            let ws = vec![&w; edges];
            let grouped = moment(agg, &law, &ws);
            let plain: f64 = patterns(edges)
                .iter()
                .map(|pat| shape_sum(pat.shape, agg) * law.expect(pat, &ws))
                .sum();
            assert!((grouped - plain).abs() < 1e-10 * (1.0 + plain.abs()));
        }
    }

    #[test]
    fn label_law_sums_to_one() {
        let law = LabelLaw::<f64>::new(&[3, 2, 4], 4);
        for m in 0..=4 {
            let s: f64 = law.probs[m].iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
