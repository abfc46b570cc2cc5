// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line arguments.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gkcp::analytic::DerivativeMode;
use gkcp_bench::{CvStatistic, Family, GeneratorSpec, TestKind};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "gkcp", version, about = "Kernel-based change-point detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Test for a single change point or a changed interval.
    Test(TestArgs),
    /// Find multiple change points by binary segmentation.
    Segment(SegmentArgs),
    /// Monte-Carlo studies on synthetic data.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Write a synthetic sequence as CSV.
    Gen(GenArgs),
}

/// A split count given either absolutely (`50`) or as a fraction of `n` (`0.05`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extent {
    Count(usize),
    Fraction(f64),
}

impl FromStr for Extent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(k) = s.parse::<usize>() {
            return Ok(Extent::Count(k));
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f < 1.0 => Ok(Extent::Fraction(f)),
            _ => Err(format!("'{s}' is neither a count nor a fraction in (0, 1)")),
        }
    }
}

impl Extent {
    /// Absolute count for a sequence of length `n`.
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Extent::Count(k) => k,
            Extent::Fraction(f) => (f * n as f64).floor() as usize,
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: gkcp_bench::BenchError| e.to_string())
}

fn parse_test_kind(s: &str) -> Result<TestKind, String> {
    s.parse().map_err(|e: gkcp_bench::BenchError| e.to_string())
}

/// `zd` or `zw<r>`, e.g. `zw1.2`.
fn parse_cv_statistic(s: &str) -> Result<CvStatistic, String> {
    if s == "zd" {
        return Ok(CvStatistic::Zd);
    }
    s.strip_prefix("zw")
        .and_then(|r| r.parse::<f64>().ok())
        .filter(|r| r.is_finite() && *r > 0.0)
        .map(CvStatistic::Zw)
        .ok_or_else(|| format!("'{s}' is not 'zd' or 'zw<r>'"))
}

#[derive(Args, Debug, Clone)]
pub struct GenParams {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Number of pre-change rows; omit for no change.
    #[arg(long)]
    pub tau: Option<usize>,
    /// Norm of the post-change mean shift.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Post-change covariance scale.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Degrees of freedom of the multivariate t family.
    #[arg(long, default_value_t = 5.0)]
    pub df: f64,
}

impl GenParams {
    pub fn spec(&self, family: Family, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            family,
            d: self.d,
            n: self.n,
            tau: self.tau,
            delta: self.delta,
            sigma2: self.sigma2,
            df: self.df,
            seed,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// CSV of observations: one row per time point, one column per coordinate.
    #[arg(long, conflicts_with_all = ["gram", "gen"])]
    pub input: Option<PathBuf>,
    /// CSV of a precomputed symmetric n x n kernel matrix.
    #[arg(long, conflicts_with = "gen")]
    pub gram: Option<PathBuf>,
    /// Skip the first CSV line.
    #[arg(long)]
    pub skip_header: bool,
    /// Generate the data instead of reading it.
    #[arg(long, value_name = "FAMILY", value_parser = parse_family)]
    pub gen: Option<Family>,
    #[command(flatten)]
    pub gen_params: GenParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fgkcp1,
    Fgkcp2,
    /// GKCP with a permutation p-value.
    Gkcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DerivativeArg {
    ExactDiscrete,
    Asymptotic,
}

impl From<DerivativeArg> for DerivativeMode {
    fn from(d: DerivativeArg) -> Self {
        match d {
            DerivativeArg::ExactDiscrete => DerivativeMode::ExactDiscrete,
            DerivativeArg::Asymptotic => DerivativeMode::Asymptotic,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Method::Fgkcp1)]
    pub method: Method,
    /// Combine component p-values by Simes instead of Bonferroni.
    #[arg(long)]
    pub simes: bool,
    /// Test for a changed interval instead of a single change.
    #[arg(long)]
    pub interval: bool,
    /// Smallest split size; a count or a fraction of n. Default floor(0.05 n).
    #[arg(long)]
    pub n0: Option<Extent>,
    /// Largest split size; a count or a fraction of n. Default n - n0.
    #[arg(long)]
    pub n1: Option<Extent>,
    /// r values whose scan maxima are reported.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 1.2])]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    /// Master seed for data generation and permutations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Kernel bandwidth; default is the median heuristic.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = DerivativeArg::ExactDiscrete)]
    pub derivative_mode: DerivativeArg,
    /// Disable the skewness correction of the analytic p-values.
    #[arg(long)]
    pub no_skew: bool,
    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-split scan curve CSV (t,Z_D,Z_W12,Z_W08,GKCP).
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Method::Fgkcp1)]
    pub method: Method,
    #[arg(long)]
    pub simes: bool,
    /// Split a segment when its p-value is below this.
    #[arg(long, default_value_t = 0.001)]
    pub threshold: f64,
    /// Segments shorter than this are not tested.
    #[arg(long, default_value_t = 20)]
    pub min_len: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed kernel bandwidth for every segment.
    #[arg(long, conflicts_with = "global_bandwidth")]
    pub bandwidth: Option<f64>,
    /// Use the full-sequence median heuristic for every segment.
    #[arg(long)]
    pub global_bandwidth: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct StudyArgs {
    #[arg(long, value_parser = parse_family, default_value = "gaussian_type1")]
    pub family: Family,
    #[command(flatten)]
    pub gen_params: GenParams,
    /// Comma-separated tests: fgkcp1, fgkcp2, fgkcp1_simes, fgkcp2_simes, gkcp.
    #[arg(long, value_delimiter = ',', value_parser = parse_test_kind,
          default_value = "fgkcp1,fgkcp2,fgkcp1_simes,fgkcp2_simes,gkcp")]
    pub tests: Vec<TestKind>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub n0: Option<Extent>,
    #[arg(long)]
    pub n1: Option<Extent>,
    /// JSON report path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-replicate JSON-lines records.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CriticalValueArgs {
    #[arg(long, value_parser = parse_family, default_value = "gaussian_type1")]
    pub family: Family,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    #[arg(long, default_value_t = 5.0)]
    pub df: f64,
    /// Statistics: zd and zw<r>.
    #[arg(long, value_delimiter = ',', value_parser = parse_cv_statistic,
          default_value = "zd,zw1.2,zw0.8")]
    pub stats: Vec<CvStatistic>,
    /// n0 values; n1 = n - n0.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 50])]
    pub n0: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Table CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RuntimeArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 400, 800])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_test_kind, default_value = "fgkcp1,fgkcp2")]
    pub tests: Vec<TestKind>,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum BenchCommand {
    /// Rejections and localization accuracy under a planted change.
    Power(StudyArgs),
    /// Rejections on no-change data.
    Size(StudyArgs),
    /// Analytic versus permutation critical values.
    CriticalValue(CriticalValueArgs),
    /// Runtime against sequence length.
    Runtime(RuntimeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_family, default_value = "gaussian_type1")]
    pub family: Family,
    #[command(flatten)]
    pub gen_params: GenParams,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a header line x1,...,xd.
    #[arg(long)]
    pub header: bool,
    /// CSV path; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
