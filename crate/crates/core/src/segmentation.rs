// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multiple change points by recursive binary segmentation.
//!
//! A segment is tested with the chosen single-change test; if its p-value is
//! below the threshold it is split at the estimated change and both halves
//! are processed the same way. Change points are reported as the number of
//! observations before the change, in the coordinates of the full sequence.

use serde::{Deserialize, Serialize};

use crate::analytic::TailApproxConfig;
use crate::error::{Error, Result};
use crate::fast::{fast_test, ChangeEstimate, Combination, FastMethod};
use crate::gram::{gaussian_gram, median_heuristic, GramSummary, Sequence};
use crate::num::Scalar;
use crate::permutation::{perm_pvalue, PermConfig, PermStatistic};
use crate::scan::{scan_single, ScanBounds, ScanContext};

/// Test run on each segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMethod {
    Fgkcp1,
    Fgkcp2,
    /// GKCP with a permutation p-value.
    Gkcp {
        n_perm: usize,
    },
}

/// Where the kernel bandwidth comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    /// Median heuristic recomputed on every segment.
    #[default]
    PerSegment,
    /// Median heuristic of the full sequence, reused everywhere.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub method: SegmentMethod,
    pub combination: Combination,
    /// Split when the segment's p-value is strictly below this.
    pub threshold: f64,
    /// Segments shorter than this are not tested.
    pub min_len: usize,
    pub seed: u64,
    pub bandwidth: BandwidthMode,
    /// Explicit bandwidth; overrides `bandwidth` when set.
    pub bandwidth_value: Option<f64>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            method: SegmentMethod::Fgkcp1,
            combination: Combination::Bonferroni,
            threshold: 0.001,
            min_len: 20,
            seed: 0,
            bandwidth: BandwidthMode::PerSegment,
            bandwidth_value: None,
        }
    }
}

/// Why a node is or is not split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOutcome {
    Split,
    NotSignificant,
    TooShort,
    /// All observations in the segment coincide.
    Constant,
}

/// One tested segment `[start, end)` of the full sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentNode {
    pub start: usize,
    pub end: usize,
    pub method: SegmentMethod,
    pub p_value: Option<f64>,
    /// Global change point when the node was split.
    pub split: Option<usize>,
    pub outcome: NodeOutcome,
    pub children: Vec<SegmentNode>,
}

impl SegmentNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    fn collect(&self, out: &mut Vec<usize>) {
        if let [left, right] = self.children.as_slice() {
            left.collect(out);
            out.extend(self.split);
            right.collect(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeTree {
    pub n: usize,
    pub root: SegmentNode,
    /// Sorted change points.
    pub change_points: Vec<usize>,
}

/// Minimum distance of a split from a segment end: `max(L/20, ceil(min_len/2), 2)`.
pub fn segment_n0(len: usize, min_len: usize) -> usize {
    (len / 20).max(min_len.div_ceil(2)).max(2)
}

fn node_seed(seed: u64, start: usize, end: usize) -> u64 {
    let mut z =
        seed ^ (start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (end as u64).rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn binary_segment<T: Scalar>(seq: &Sequence<T>, cfg: &SegmentConfig) -> Result<ChangeTree> {
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Error::InvalidConfig(format!(
            "threshold {} is outside [0, 1]",
            cfg.threshold
        )));
    }
    if cfg.min_len < 4 {
        return Err(Error::InvalidConfig(format!(
            "min_len {} is below 4",
            cfg.min_len
        )));
    }
    if let SegmentMethod::Gkcp { n_perm: 0 } = cfg.method {
        return Err(Error::InvalidConfig("n_perm must be at least 1".into()));
    }
    let global_h = match (cfg.bandwidth_value, cfg.bandwidth) {
        (Some(h), _) => Some(T::from_f64(h).ok_or(Error::InvalidBandwidth(h))?),
        (None, BandwidthMode::Global) => Some(median_heuristic(seq)?),
        (None, BandwidthMode::PerSegment) => None,
    };
    let root = segment(seq, cfg, global_h, 0, seq.n())?;
    let mut change_points = Vec::new();
    root.collect(&mut change_points);
    Ok(ChangeTree {
        n: seq.n(),
        root,
        change_points,
    })
}

fn segment<T: Scalar>(
    seq: &Sequence<T>,
    cfg: &SegmentConfig,
    global_h: Option<T>,
    start: usize,
    end: usize,
) -> Result<SegmentNode> {
    let len = end - start;
    let mut node = SegmentNode {
        start,
        end,
        method: cfg.method,
        p_value: None,
        split: None,
        outcome: NodeOutcome::TooShort,
        children: Vec::new(),
    };
    if len < cfg.min_len || len < 4 {
        return Ok(node);
    }
    let part = seq.slice(start, end)?;
    let g = match gaussian_gram(&part, global_h) {
        Ok(g) => g,
        Err(Error::AllPointsIdentical) => {
            node.outcome = NodeOutcome::Constant;
            return Ok(node);
        }
        Err(e) => return Err(e),
    };
    let n0 = segment_n0(len, cfg.min_len);
    let bounds = ScanBounds::new(n0, len - n0, len)?;
    let (p, t) = test_segment(&g, bounds, cfg, node_seed(cfg.seed, start, end))?;
    node.p_value = Some(p);
    if p >= cfg.threshold {
        node.outcome = NodeOutcome::NotSignificant;
        return Ok(node);
    }
    let cut = start + t;
    let (left, right) = rayon::join(
        || segment(seq, cfg, global_h, start, cut),
        || segment(seq, cfg, global_h, cut, end),
    );
    node.children = vec![left?, right?];
    node.split = Some(cut);
    node.outcome = NodeOutcome::Split;
    Ok(node)
}

/// `(p-value, local split)` for one segment.
fn test_segment<T: Scalar>(
    g: &GramSummary<T>,
    bounds: ScanBounds,
    cfg: &SegmentConfig,
    seed: u64,
) -> Result<(f64, usize)> {
    match cfg.method {
        SegmentMethod::Fgkcp1 | SegmentMethod::Fgkcp2 => {
            let method = if cfg.method == SegmentMethod::Fgkcp1 {
                FastMethod::Fgkcp1
            } else {
                FastMethod::Fgkcp2
            };
            let tail = TailApproxConfig::new(bounds);
            // alpha only sets the `rejected` flag, which is not used here
            let r = fast_test(g, &tail, method, cfg.combination, 1.0, false)?;
            let t = match r.argmax {
                ChangeEstimate::Point(t) => t,
                ChangeEstimate::Interval { start, .. } => start,
            };
            Ok((r.combined_p, t))
        }
        SegmentMethod::Gkcp { n_perm } => {
            let ctx = ScanContext::new(g, bounds, &[])?;
            let t = scan_single(g, &ctx).argmax_t;
            let perm = perm_pvalue(
                g,
                &ctx,
                &PermConfig {
                    n_perm,
                    seed,
                    statistic: PermStatistic::GkcpSingle,
                },
            )?;
            Ok((perm.p, t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn regimes(seed: u64, cuts: &[usize], n: usize, d: usize, shift: f64) -> Sequence<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n * d)
            .map(|k| {
                let regime = cuts.iter().filter(|&&c| k / d >= c).count();
                let z: f64 = StandardNormal.sample(&mut rng);
                z + shift * regime as f64
            })
            .collect();
        Sequence::new(n, d, v).unwrap()
    }

    #[test]
    fn n0_rule() {
        assert_eq!(segment_n0(300, 20), 15);
        assert_eq!(segment_n0(100, 20), 10);
        assert_eq!(segment_n0(30, 4), 2);
        assert_eq!(segment_n0(1000, 20), 50);
    }

    #[test]
    fn finds_two_planted_changes() {
        let s = regimes(3, &[100, 200], 300, 10, 1.5);
        let tree = binary_segment(&s, &SegmentConfig::default()).unwrap();
        assert_eq!(tree.change_points.len(), 2, "{:?}", tree.change_points);
        assert!(tree.change_points[0].abs_diff(100) <= 10);
        assert!(tree.change_points[1].abs_diff(200) <= 10);
    }

    #[test]
    fn tree_structure_invariants() {
        let s = regimes(4, &[60, 140], 200, 5, 2.0);
        let cfg = SegmentConfig {
            min_len: 16,
            ..Default::default()
        };
        let tree = binary_segment(&s, &cfg).unwrap();
        fn check(node: &SegmentNode, cfg: &SegmentConfig) {
            match node.outcome {
                NodeOutcome::Split => {
                    let [l, r] = node.children.as_slice() else {
                        panic!()
                    };
                    let cut = node.split.unwrap();
                    assert_eq!(
                        (l.start, l.end, r.start, r.end),
                        (node.start, cut, cut, node.end)
                    );
                    assert!(node.p_value.unwrap() < cfg.threshold);
                    check(l, cfg);
                    check(r, cfg);
                }
                NodeOutcome::NotSignificant => assert!(node.p_value.unwrap() >= cfg.threshold),
                NodeOutcome::TooShort => assert!(node.len() < cfg.min_len),
                NodeOutcome::Constant => {}
            }
        }
        check(&tree.root, &cfg);
        for w in tree.change_points.windows(2) {
            assert!(w[1] - w[0] >= cfg.min_len / 2);
        }
    }

    #[test]
    fn zero_threshold_never_splits() {
        let s = regimes(5, &[50], 100, 5, 5.0);
        let cfg = SegmentConfig {
            threshold: 0.0,
            ..Default::default()
        };
        assert!(binary_segment(&s, &cfg).unwrap().change_points.is_empty());
    }

    #[test]
    fn permutation_method_is_deterministic() {
        let s = regimes(6, &[40], 80, 4, 2.0);
        let cfg = SegmentConfig {
            method: SegmentMethod::Gkcp { n_perm: 99 },
            threshold: 0.05,
            seed: 11,
            ..Default::default()
        };
        let a = binary_segment(&s, &cfg).unwrap();
        let b = binary_segment(&s, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(
            a.change_points.iter().any(|c| c.abs_diff(40) <= 5),
            "{:?}",
            a.change_points
        );
    }

    #[test]
    fn global_bandwidth_mode_runs() {
        let s = regimes(7, &[100, 200], 300, 10, 1.5);
        let cfg = SegmentConfig {
            bandwidth: BandwidthMode::Global,
            ..Default::default()
        };
        let tree = binary_segment(&s, &cfg).unwrap();
        assert_eq!(tree.change_points.len(), 2, "{:?}", tree.change_points);
    }

    #[test]
    fn constant_segment_is_a_leaf() {
        let s = Sequence::new(30, 1, vec![1.0; 30]).unwrap();
        let tree = binary_segment(&s, &SegmentConfig::default()).unwrap();
        assert_eq!(tree.root.outcome, NodeOutcome::Constant);
    }

    #[test]
    fn bad_config() {
        let s = regimes(8, &[], 40, 2, 0.0);
        for cfg in [
            SegmentConfig {
                threshold: 1.5,
                ..Default::default()
            },
            SegmentConfig {
                min_len: 3,
                ..Default::default()
            },
            SegmentConfig {
                method: SegmentMethod::Gkcp { n_perm: 0 },
                ..Default::default()
            },
        ] {
            assert!(binary_segment(&s, &cfg).is_err());
        }
    }
}
