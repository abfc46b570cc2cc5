// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subcommand implementations.

use gkcp::analytic::{DerivativeMode, TailApproxConfig};
use gkcp::fast::{R_HIGH, R_LOW};
use gkcp::{
    binary_segment, fast_test, gaussian_gram, perm_pvalue, scan_interval, scan_single,
    BandwidthMode, ChangeEstimate, ChangeTree, Combination, FastMethod, PermConfig, PermStatistic,
    ScanBounds, ScanContext, SegmentConfig, SegmentMethod,
};
use gkcp_bench::output::{
    write_critical_value_csv, write_jsonl, write_runtime_csv, write_summary_csv,
};
use gkcp_bench::{
    critical_value_study, derive_seed, generate, power_study, runtime_study, scaling_exponent,
    size_study, CriticalValueRow, CvStatistic, ExperimentResult, GeneratorSpec, RuntimeRow,
    StudyConfig, TestKind,
};
use serde::Serialize;

use crate::args::{
    BenchCommand, Command, CriticalValueArgs, Extent, GenArgs, InputArgs, Method, RuntimeArgs,
    SegmentArgs, StudyArgs, TestArgs,
};
use crate::error::ConfigError;
use crate::input::{load_csv, load_generated, load_gram, write_sequence, Data, InputInfo};
use crate::report::{emit, write_atomic, write_scan_curve, Report};

pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Test(a) => run_test(&a),
        Command::Segment(a) => run_segment(&a),
        Command::Bench(BenchCommand::Power(a)) => run_study(&a, true),
        Command::Bench(BenchCommand::Size(a)) => run_study(&a, false),
        Command::Bench(BenchCommand::CriticalValue(a)) => run_critical_value(&a),
        Command::Bench(BenchCommand::Runtime(a)) => run_runtime(&a),
        Command::Gen(a) => run_gen(&a),
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Seed of the generated data for a master seed.
pub fn data_seed(master: u64) -> u64 {
    derive_seed(master, 0)
}

/// Seed of the permutation stream for a master seed.
pub fn permutation_seed(master: u64) -> u64 {
    derive_seed(master, 1)
}

fn load_input(a: &InputArgs, master: u64) -> anyhow::Result<(Data, InputInfo)> {
    match (&a.input, &a.gram, a.gen) {
        (Some(p), None, None) => load_csv(p, a.skip_header),
        (None, Some(p), None) => load_gram(p, a.skip_header),
        (None, None, Some(family)) => load_generated(&a.gen_params.spec(family, data_seed(master))),
        _ => Err(config_err(
            "exactly one of --input, --gram or --gen is required",
        )),
    }
}

fn check_alpha(alpha: f64) -> anyhow::Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("alpha = {alpha} is outside (0, 1]")))
    }
}

fn check_bandwidth(h: Option<f64>) -> anyhow::Result<()> {
    match h {
        Some(h) if !(h.is_finite() && h > 0.0) => Err(config_err(format!(
            "bandwidth = {h} must be finite and positive"
        ))),
        _ => Ok(()),
    }
}

/// `n0` defaults to `max(floor(0.05 n), 2)` and `n1` to `n - n0`.
fn resolve_bounds(n0: Option<Extent>, n1: Option<Extent>, n: usize) -> anyhow::Result<ScanBounds> {
    let n0 = n0.map_or((n / 20).max(2), |e| e.resolve(n));
    let n1 = n1.map_or(n.saturating_sub(n0), |e| e.resolve(n));
    Ok(ScanBounds::new(n0, n1, n)?)
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum BandwidthSource {
    MedianHeuristic,
    Override,
    KernelInput,
}

#[derive(Serialize)]
struct TestConfig {
    method: Method,
    /// `None` for the permutation test.
    combination: Option<Combination>,
    interval: bool,
    n0: usize,
    n1: usize,
    r: Vec<f64>,
    alpha: f64,
    n_perm: usize,
    seed: u64,
    permutation_seed: u64,
    bandwidth: Option<f64>,
    bandwidth_source: BandwidthSource,
    derivative_mode: DerivativeMode,
    skewness_correction: bool,
}

#[derive(Serialize)]
struct RMax {
    r: f64,
    max: f64,
}

#[derive(Serialize)]
struct ScanSummary {
    max_abs_zd: f64,
    max_zw: Vec<RMax>,
    max_gkcp: f64,
    argmax: ChangeEstimate,
}

#[derive(Serialize)]
struct Components {
    p_d: Option<f64>,
    p_w12: f64,
    p_w08: f64,
}

#[derive(Serialize)]
struct PermSummary {
    n_perm: usize,
    observed: f64,
    exceedances: usize,
}

#[derive(Serialize)]
struct TestResult {
    p_value: f64,
    rejected: bool,
    estimated_change: Option<ChangeEstimate>,
    components: Option<Components>,
    permutation: Option<PermSummary>,
    statistics: ScanSummary,
}

fn run_test(a: &TestArgs) -> anyhow::Result<()> {
    check_alpha(a.alpha)?;
    check_bandwidth(a.bandwidth)?;
    if let Some(r) = a.r.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(config_err(format!("r = {r} must be finite and positive")));
    }
    if a.method == Method::Gkcp && a.n_perm == 0 {
        return Err(config_err("n_perm must be at least 1"));
    }
    if a.input.gram.is_some() && a.bandwidth.is_some() {
        return Err(config_err("--bandwidth cannot be combined with --gram"));
    }
    if a.interval && a.curve.is_some() {
        return Err(config_err(
            "--curve is only available for single-change tests",
        ));
    }
    let (data, info) = load_input(&a.input, a.seed)?;
    let (g, source) = match data {
        Data::Observations(seq) => {
            let source = if a.bandwidth.is_some() {
                BandwidthSource::Override
            } else {
                BandwidthSource::MedianHeuristic
            };
            (gaussian_gram(&seq, a.bandwidth)?, source)
        }
        Data::Kernel(g) => (*g, BandwidthSource::KernelInput),
    };
    let n = g.n();
    let bounds = resolve_bounds(a.n0, a.n1, n)?;
    let tail = TailApproxConfig {
        bounds,
        skewness_correction: !a.no_skew,
        derivative_mode: a.derivative_mode.into(),
    };
    let mut r_list = vec![R_HIGH, R_LOW];
    for &r in &a.r {
        if !r_list.contains(&r) {
            r_list.push(r);
        }
    }
    let ctx = ScanContext::new(&g, bounds, &r_list)?;
    let r_index = |r: f64| r_list.iter().position(|&x| x == r).unwrap_or(0);

    let statistics = if a.interval {
        let p = scan_interval(&g, &ctx);
        ScanSummary {
            max_abs_zd: p.max_abs_zd(),
            max_zw: a
                .r
                .iter()
                .map(|&r| RMax {
                    r,
                    max: p.max_zw(r_index(r)),
                })
                .collect(),
            max_gkcp: p.max_gkcp,
            argmax: ChangeEstimate::Interval {
                start: p.argmax.0,
                end: p.argmax.1,
            },
        }
    } else {
        let p = scan_single(&g, &ctx);
        if let Some(path) = &a.curve {
            write_atomic(path, |w| write_scan_curve(w, &p, 0, 1))?;
        }
        ScanSummary {
            max_abs_zd: p.max_abs_zd(),
            max_zw: a
                .r
                .iter()
                .map(|&r| RMax {
                    r,
                    max: p.max_zw(r_index(r)),
                })
                .collect(),
            max_gkcp: p.max_gkcp,
            argmax: ChangeEstimate::Point(p.argmax_t),
        }
    };

    let combination = if a.simes {
        Combination::Simes
    } else {
        Combination::Bonferroni
    };
    let perm_seed = permutation_seed(a.seed);
    let result = match a.method {
        Method::Fgkcp1 | Method::Fgkcp2 => {
            let method = if a.method == Method::Fgkcp1 {
                FastMethod::Fgkcp1
            } else {
                FastMethod::Fgkcp2
            };
            let r = fast_test(&g, &tail, method, combination, a.alpha, a.interval)?;
            TestResult {
                p_value: r.combined_p,
                rejected: r.rejected,
                estimated_change: r.estimated_change,
                components: Some(Components {
                    p_d: r.p_d,
                    p_w12: r.p_w12,
                    p_w08: r.p_w08,
                }),
                permutation: None,
                statistics,
            }
        }
        Method::Gkcp => {
            let cfg = PermConfig {
                n_perm: a.n_perm,
                seed: perm_seed,
                statistic: if a.interval {
                    PermStatistic::GkcpInterval
                } else {
                    PermStatistic::GkcpSingle
                },
            };
            let out = perm_pvalue(&g, &ctx, &cfg)?;
            let rejected = out.p < a.alpha;
            TestResult {
                p_value: out.p,
                rejected,
                estimated_change: rejected.then_some(statistics.argmax),
                components: None,
                permutation: Some(PermSummary {
                    n_perm: a.n_perm,
                    observed: out.observed,
                    exceedances: out.draws.iter().filter(|&&d| d >= out.observed).count(),
                }),
                statistics,
            }
        }
    };
    let config = TestConfig {
        method: a.method,
        combination: (a.method != Method::Gkcp).then_some(combination),
        interval: a.interval,
        n0: bounds.n0,
        n1: bounds.n1,
        r: a.r.clone(),
        alpha: a.alpha,
        n_perm: a.n_perm,
        seed: a.seed,
        permutation_seed: perm_seed,
        bandwidth: g.bandwidth(),
        bandwidth_source: source,
        derivative_mode: tail.derivative_mode,
        skewness_correction: tail.skewness_correction,
    };
    let json = Report::new("test", Some(&info), &config, &result).to_json()?;
    emit(a.output.as_deref(), &json)
}

#[derive(Serialize)]
struct SegmentRunConfig {
    seed: u64,
    segmentation: SegmentConfig,
}

fn run_segment(a: &SegmentArgs) -> anyhow::Result<()> {
    check_bandwidth(a.bandwidth)?;
    if a.input.gram.is_some() {
        return Err(config_err(
            "segmentation needs observations; --gram is not supported",
        ));
    }
    let (data, info) = load_input(&a.input, a.seed)?;
    let Data::Observations(seq) = data else {
        return Err(config_err("segmentation needs observations"));
    };
    let cfg = SegmentConfig {
        method: match a.method {
            Method::Fgkcp1 => SegmentMethod::Fgkcp1,
            Method::Fgkcp2 => SegmentMethod::Fgkcp2,
            Method::Gkcp => SegmentMethod::Gkcp { n_perm: a.n_perm },
        },
        combination: if a.simes {
            Combination::Simes
        } else {
            Combination::Bonferroni
        },
        threshold: a.threshold,
        min_len: a.min_len,
        seed: permutation_seed(a.seed),
        bandwidth: if a.global_bandwidth {
            BandwidthMode::Global
        } else {
            BandwidthMode::PerSegment
        },
        bandwidth_value: a.bandwidth,
    };
    let tree: ChangeTree = binary_segment(&seq, &cfg)?;
    let config = SegmentRunConfig {
        seed: a.seed,
        segmentation: cfg,
    };
    let json = Report::new("segment", Some(&info), &config, &tree).to_json()?;
    emit(a.output.as_deref(), &json)
}

#[derive(Serialize)]
struct StudyResult<'a> {
    spec: GeneratorSpec,
    tests: &'a [TestKind],
    results: &'a [ExperimentResult],
}

fn run_study(a: &StudyArgs, power: bool) -> anyhow::Result<()> {
    let mut spec = a.gen_params.spec(a.family, 0);
    if power && spec.tau.is_none() {
        spec.tau = Some(spec.n / 2);
    }
    let bounds = match (a.n0, a.n1) {
        (None, None) => None,
        (n0, n1) => Some(resolve_bounds(n0, n1, spec.n)?),
    };
    let cfg = StudyConfig {
        replicates: a.replicates,
        alpha: a.alpha,
        n_perm: a.n_perm,
        master_seed: a.seed,
        bounds,
    };
    let out = if power {
        power_study(&spec, &a.tests, &cfg)?
    } else {
        size_study(&spec, &a.tests, &cfg)?
    };
    if let Some(path) = &a.records {
        write_atomic(path, |w| Ok(write_jsonl(w, &out.records)?))?;
    }
    if let Some(path) = &a.summary {
        write_atomic(path, |w| Ok(write_summary_csv(w, &out.results)?))?;
    }
    let result = StudyResult {
        spec: out.spec,
        tests: &out.tests,
        results: &out.results,
    };
    let command = if power { "bench power" } else { "bench size" };
    let json = Report::new(command, None, &out.config, &result).to_json()?;
    emit(a.output.as_deref(), &json)
}

#[derive(Serialize)]
struct CriticalValueConfig<'a> {
    spec: GeneratorSpec,
    seed: u64,
    stats: &'a [CvStatistic],
    n0: &'a [usize],
    n_perm: usize,
    level: f64,
}

fn run_critical_value(a: &CriticalValueArgs) -> anyhow::Result<()> {
    let spec = GeneratorSpec {
        df: a.df,
        ..GeneratorSpec::null(a.family, a.n, a.d).with_seed(data_seed(a.seed))
    };
    let rows: Vec<CriticalValueRow> =
        critical_value_study(&spec, &a.stats, &a.n0, a.n_perm, a.level)?;
    if let Some(path) = &a.csv {
        write_atomic(path, |w| Ok(write_critical_value_csv(w, &rows)?))?;
    }
    let config = CriticalValueConfig {
        spec,
        seed: a.seed,
        stats: &a.stats,
        n0: &a.n0,
        n_perm: a.n_perm,
        level: a.level,
    };
    let json = Report::new("bench critical-value", None, &config, &rows).to_json()?;
    emit(a.output.as_deref(), &json)
}

#[derive(Serialize)]
struct RuntimeConfig<'a> {
    n: &'a [usize],
    d: usize,
    tests: &'a [TestKind],
    runs: usize,
    n_perm: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Exponent {
    test: TestKind,
    exponent: f64,
}

#[derive(Serialize)]
struct RuntimeResult {
    rows: Vec<RuntimeRow>,
    /// Slope of log minimum time on log n, per test.
    scaling: Vec<Exponent>,
}

fn run_runtime(a: &RuntimeArgs) -> anyhow::Result<()> {
    let rows = runtime_study(&a.n, a.d, &a.tests, a.runs, a.n_perm, a.seed)?;
    if let Some(path) = &a.csv {
        write_atomic(path, |w| Ok(write_runtime_csv(w, &rows)?))?;
    }
    let scaling = if a.n.len() >= 2 {
        a.tests
            .iter()
            .map(|&test| {
                let (ns, ts): (Vec<usize>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.test == test)
                    .map(|r| (r.n, r.min_seconds))
                    .unzip();
                Exponent {
                    test,
                    exponent: scaling_exponent(&ns, &ts),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let config = RuntimeConfig {
        n: &a.n,
        d: a.d,
        tests: &a.tests,
        runs: a.runs,
        n_perm: a.n_perm,
        seed: a.seed,
    };
    let result = RuntimeResult { rows, scaling };
    let json = Report::new("bench runtime", None, &config, &result).to_json()?;
    emit(a.output.as_deref(), &json)
}

fn run_gen(a: &GenArgs) -> anyhow::Result<()> {
    let spec = a.gen_params.spec(a.family, data_seed(a.seed));
    let seq = generate(&spec)?;
    match &a.output {
        Some(path) => write_atomic(path, |w| Ok(write_sequence(w, &seq, a.header)?)),
        None => Ok(write_sequence(std::io::stdout().lock(), &seq, a.header)?),
    }
}
