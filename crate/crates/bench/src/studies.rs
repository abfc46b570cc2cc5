// SPDX-License-Identifier: MIT OR Apache-2.0

//! Size, power, critical-value and runtime studies.
//!
//! Every replicate draws its data and permutation seeds from
//! [`derive_seed`], a pure function of the master seed and the replicate
//! index, so results do not depend on scheduling.

use std::time::Instant;

use gkcp::analytic::{critical_value, TailApproxConfig, TailKind, TailModel};
use gkcp::fast::{fast_pvalues, Combination, FastMethod};
use gkcp::{
    gaussian_gram, perm_pvalue, permutation_maxima, scan_single, PermConfig, PermStatistic,
    ScanBounds, ScanContext,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::generators::{generate, GeneratorSpec};

/// A detection counts as accurate when within this many positions of `tau`.
pub const ACCURACY_WINDOW: usize = 20;

/// The `k`-th seed of the stream keyed by `master`.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(k);
    rng.next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Fgkcp1,
    Fgkcp2,
    Fgkcp1Simes,
    Fgkcp2Simes,
    /// GKCP with a permutation p-value.
    Gkcp,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Fgkcp1,
        TestKind::Fgkcp2,
        TestKind::Fgkcp1Simes,
        TestKind::Fgkcp2Simes,
        TestKind::Gkcp,
    ];

    fn fast(self) -> Option<(FastMethod, Combination)> {
        match self {
            TestKind::Fgkcp1 => Some((FastMethod::Fgkcp1, Combination::Bonferroni)),
            TestKind::Fgkcp2 => Some((FastMethod::Fgkcp2, Combination::Bonferroni)),
            TestKind::Fgkcp1Simes => Some((FastMethod::Fgkcp1, Combination::Simes)),
            TestKind::Fgkcp2Simes => Some((FastMethod::Fgkcp2, Combination::Simes)),
            TestKind::Gkcp => None,
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fgkcp1" => TestKind::Fgkcp1,
            "fgkcp2" => TestKind::Fgkcp2,
            "fgkcp1_simes" => TestKind::Fgkcp1Simes,
            "fgkcp2_simes" => TestKind::Fgkcp2Simes,
            "gkcp" => TestKind::Gkcp,
            other => return Err(BenchError::InvalidConfig(format!("unknown test '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub replicates: usize,
    pub alpha: f64,
    /// Permutations for [`TestKind::Gkcp`].
    pub n_perm: usize,
    pub master_seed: u64,
    /// `None` uses `n0 = max(n/20, 2)`, `n1 = n - n0`.
    pub bounds: Option<ScanBounds>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            alpha: 0.05,
            n_perm: 1000,
            master_seed: 1,
            bounds: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: TestKind,
    pub p: f64,
    pub rejected: bool,
    /// GKCP argmax.
    pub estimate: usize,
    pub accurate: bool,
}

/// One JSON-lines record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub data_seed: u64,
    pub outcomes: Vec<TestOutcome>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub test: TestKind,
    pub replicates: usize,
    pub rejections: usize,
    pub accurate: usize,
    pub rejection_rate: f64,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyOutput {
    pub spec: GeneratorSpec,
    pub config: StudyConfig,
    pub tests: Vec<TestKind>,
    pub results: Vec<ExperimentResult>,
    pub records: Vec<ReplicateRecord>,
}

fn replicate(
    spec: &GeneratorSpec,
    tests: &[TestKind],
    cfg: &StudyConfig,
    index: usize,
) -> Result<ReplicateRecord> {
    let start = Instant::now();
    let data_seed = derive_seed(cfg.master_seed, 2 * index as u64);
    let perm_seed = derive_seed(cfg.master_seed, 2 * index as u64 + 1);
    let seq = generate(&spec.with_seed(data_seed))?;
    let g = gaussian_gram(&seq, None)?;
    let bounds = match cfg.bounds {
        Some(b) => ScanBounds::new(b.n0, b.n1, spec.n)?,
        None => ScanBounds::default_for(spec.n)?,
    };
    let accurate = |rejected: bool, t: usize| {
        rejected
            && spec
                .tau
                .is_some_and(|tau| t.abs_diff(tau) <= ACCURACY_WINDOW)
    };
    let mut outcomes = Vec::with_capacity(tests.len());
    let needs_fast = tests.iter().any(|t| t.fast().is_some());
    let with_d = tests
        .iter()
        .any(|t| matches!(t, TestKind::Fgkcp1 | TestKind::Fgkcp1Simes));
    let fast = if needs_fast {
        Some(fast_pvalues(
            &g,
            &TailApproxConfig::new(bounds),
            false,
            with_d,
        )?)
    } else {
        None
    };
    for &test in tests {
        let outcome = match (test.fast(), &fast) {
            (Some((method, comb)), Some(fp)) => {
                let r = fp.combine(method, comb, cfg.alpha)?;
                let t = match r.argmax {
                    gkcp::ChangeEstimate::Point(t) => t,
                    gkcp::ChangeEstimate::Interval { start, .. } => start,
                };
                TestOutcome {
                    test,
                    p: r.combined_p,
                    rejected: r.rejected,
                    estimate: t,
                    accurate: accurate(r.rejected, t),
                }
            }
            _ => {
                let ctx = ScanContext::new(&g, bounds, &[])?;
                let t = scan_single(&g, &ctx).argmax_t;
                let perm = perm_pvalue(
                    &g,
                    &ctx,
                    &PermConfig {
                        n_perm: cfg.n_perm,
                        seed: perm_seed,
                        statistic: PermStatistic::GkcpSingle,
                    },
                )?;
                let rejected = perm.p < cfg.alpha;
                TestOutcome {
                    test,
                    p: perm.p,
                    rejected,
                    estimate: t,
                    accurate: accurate(rejected, t),
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(ReplicateRecord {
        replicate: index,
        data_seed,
        outcomes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `tests` on `cfg.replicates` fresh datasets drawn from `spec`.
pub fn run_study(
    spec: &GeneratorSpec,
    tests: &[TestKind],
    cfg: &StudyConfig,
) -> Result<StudyOutput> {
    spec.validate()?;
    if tests.is_empty() || cfg.replicates == 0 {
        return Err(BenchError::InvalidConfig(
            "need at least one test and one replicate".into(),
        ));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return Err(BenchError::InvalidConfig(format!(
            "alpha = {} is outside (0, 1]",
            cfg.alpha
        )));
    }
    if tests.contains(&TestKind::Gkcp) && cfg.n_perm == 0 {
        return Err(BenchError::InvalidConfig(
            "n_perm must be at least 1".into(),
        ));
    }
    let records = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| replicate(spec, tests, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mean_seconds = records.iter().map(|r| r.seconds).sum::<f64>() / records.len() as f64;
    let results = tests
        .iter()
        .enumerate()
        .map(|(k, &test)| {
            let rejections = records.iter().filter(|r| r.outcomes[k].rejected).count();
            let accurate = records.iter().filter(|r| r.outcomes[k].accurate).count();
            ExperimentResult {
                test,
                replicates: records.len(),
                rejections,
                accurate,
                rejection_rate: rejections as f64 / records.len() as f64,
                mean_seconds,
            }
        })
        .collect();
    Ok(StudyOutput {
        spec: *spec,
        config: *cfg,
        tests: tests.to_vec(),
        results,
        records,
    })
}

/// Power study: `spec` must plant a change.
pub fn power_study(
    spec: &GeneratorSpec,
    tests: &[TestKind],
    cfg: &StudyConfig,
) -> Result<StudyOutput> {
    if spec.tau.is_none() {
        return Err(BenchError::InvalidSpec("a power study needs tau".into()));
    }
    run_study(spec, tests, cfg)
}

/// Size study: the change is removed from `spec` (`tau = None`).
pub fn size_study(
    spec: &GeneratorSpec,
    tests: &[TestKind],
    cfg: &StudyConfig,
) -> Result<StudyOutput> {
    let null = GeneratorSpec {
        tau: None,
        delta: 0.0,
        sigma2: 1.0,
        ..*spec
    };
    run_study(&null, tests, cfg)
}

/// Which scan maximum a critical value is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvStatistic {
    /// `max |Z_D|`.
    Zd,
    /// `max Z_{W,r}`.
    Zw(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueRow {
    pub statistic: CvStatistic,
    pub n0: usize,
    pub n1: usize,
    pub analytic_base: f64,
    pub analytic_skew: f64,
    pub permutation: f64,
    pub n_perm: usize,
}

/// Linear-interpolation quantile of sorted data (R's type 7).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Analytic and permutation critical values at `level` on one dataset
/// drawn from `spec`, for each `n0` in `n0_grid` with `n1 = n - n0`.
pub fn critical_value_study(
    spec: &GeneratorSpec,
    stats: &[CvStatistic],
    n0_grid: &[usize],
    n_perm: usize,
    level: f64,
) -> Result<Vec<CriticalValueRow>> {
    if n_perm == 0 || !(level > 0.0 && level < 1.0) {
        return Err(BenchError::InvalidConfig(
            "need n_perm >= 1 and level in (0, 1)".into(),
        ));
    }
    let seq = generate(spec)?;
    let g = gaussian_gram(&seq, None)?;
    let n = spec.n;
    let r_list: Vec<f64> = stats
        .iter()
        .filter_map(|s| match s {
            CvStatistic::Zw(r) => Some(*r),
            CvStatistic::Zd => None,
        })
        .collect();
    let mut rows = Vec::new();
    for &n0 in n0_grid {
        let bounds = ScanBounds::new(n0, n.saturating_sub(n0), n)?;
        let ctx = ScanContext::new(&g, bounds, &r_list)?;
        let maxima = permutation_maxima(&g, &ctx, n_perm, spec.seed ^ 0x5eed, false);
        let tail = TailApproxConfig::new(bounds);
        for &stat in stats {
            let (kind, mut draws): (TailKind, Vec<f64>) = match stat {
                CvStatistic::Zd => (TailKind::SingleD, maxima.iter().map(|m| m.abs_zd).collect()),
                CvStatistic::Zw(r) => {
                    let ri = r_list.iter().position(|&x| x == r).unwrap_or(0);
                    (
                        TailKind::SingleW { r },
                        maxima.iter().map(|m| m.zw[ri]).collect(),
                    )
                }
            };
            draws.sort_by(f64::total_cmp);
            let model = TailModel::new(&g, &tail, kind)?;
            rows.push(CriticalValueRow {
                statistic: stat,
                n0,
                n1: bounds.n1,
                analytic_base: critical_value(&model, level, false),
                analytic_skew: critical_value(&model, level, true),
                permutation: quantile_type7(&draws, 1.0 - level),
                n_perm,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub n: usize,
    pub test: TestKind,
    pub runs: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
}

/// Wall-clock time of each test end to end (kernel construction included)
/// on Gaussian null data, `runs` times per `n`.
pub fn runtime_study(
    n_grid: &[usize],
    d: usize,
    tests: &[TestKind],
    runs: usize,
    n_perm: usize,
    master_seed: u64,
) -> Result<Vec<RuntimeRow>> {
    if runs == 0 {
        return Err(BenchError::InvalidConfig("runs must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &n in n_grid {
        let spec = GeneratorSpec::null(crate::generators::Family::GaussianType1, n, d);
        let cfg = StudyConfig {
            replicates: 1,
            n_perm,
            master_seed,
            ..Default::default()
        };
        for &test in tests {
            let mut times = Vec::with_capacity(runs);
            for k in 0..runs {
                let t0 = Instant::now();
                replicate(&spec, &[test], &cfg, k)?;
                times.push(t0.elapsed().as_secs_f64());
            }
            rows.push(RuntimeRow {
                n,
                test,
                runs,
                mean_seconds: times.iter().sum::<f64>() / runs as f64,
                min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln time` on `ln n`.
pub fn scaling_exponent(ns: &[usize], times: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
