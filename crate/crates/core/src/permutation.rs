// SPDX-License-Identifier: MIT OR Apache-2.0

//! Permutation p-values for the scan maxima.
//!
//! The `k`-th permutation is a pure function of `(seed, k)`: a ChaCha8
//! stream keyed by the seed with stream id `k` drives a Fisher-Yates
//! shuffle. Draws are computed in parallel and collected in order, so the
//! result does not depend on the worker count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramSummary;
use crate::num::{to_f64, Scalar};
use crate::scan::{interval_maxima, scan_maxima, ScanContext, ScanMaxima};

/// Which maximum the permutation distribution is built for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermStatistic {
    GkcpSingle,
    GkcpInterval,
    /// `max |Z_D(t)|`.
    Zd,
    /// `max Z_{W,r}(t)`; `r` must be in the context's `r_list`.
    Zw(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermConfig {
    pub n_perm: usize,
    pub seed: u64,
    pub statistic: PermStatistic,
}

impl Default for PermConfig {
    fn default() -> Self {
        Self {
            n_perm: 1000,
            seed: 0,
            statistic: PermStatistic::GkcpSingle,
        }
    }
}

/// The `k`-th permutation of `0..n` for `seed`.
pub fn permutation(seed: u64, k: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Scan maxima under permutations `0..n_perm`, in permutation order.
pub fn permutation_maxima<T: Scalar>(
    g: &GramSummary<T>,
    ctx: &ScanContext<T>,
    n_perm: usize,
    seed: u64,
    interval: bool,
) -> Vec<ScanMaxima<T>> {
    (0..n_perm as u64)
        .into_par_iter()
        .map(|k| {
            let order = permutation(seed, k, g.n());
            if interval {
                interval_maxima(g, ctx, Some(&order))
            } else {
                scan_maxima(g, ctx, Some(&order))
            }
        })
        .collect()
}

/// Permutation p-value with its observed value and permuted draws.
#[derive(Clone, Debug, Serialize)]
pub struct PermOutcome {
    pub p: f64,
    pub observed: f64,
    pub draws: Vec<f64>,
}

/// Add-one p-value `(1 + #{draw >= observed}) / (1 + n_perm)`.
pub fn add_one_pvalue(observed: f64, draws: &[f64]) -> f64 {
    let exceed = draws.iter().filter(|&&d| d >= observed).count();
    (1 + exceed) as f64 / (1 + draws.len()) as f64
}

fn pick<T: Scalar>(m: &ScanMaxima<T>, stat: PermStatistic, wi: Option<usize>) -> f64 {
    to_f64(match stat {
        PermStatistic::GkcpSingle | PermStatistic::GkcpInterval => m.gkcp,
        PermStatistic::Zd => m.abs_zd,
        PermStatistic::Zw(_) => m.zw[wi.unwrap_or(0)],
    })
}

pub fn perm_pvalue<T: Scalar>(
    g: &GramSummary<T>,
    ctx: &ScanContext<T>,
    cfg: &PermConfig,
) -> Result<PermOutcome> {
    if cfg.n_perm == 0 {
        return Err(Error::InvalidConfig("n_perm must be at least 1".into()));
    }
    let wi = match cfg.statistic {
        PermStatistic::Zw(r) => Some(
            ctx.r_list()
                .iter()
                .position(|&x| (to_f64(x) - r).abs() < 1e-9)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("r = {r} is not in the scan's r list"))
                })?,
        ),
        _ => None,
    };
    let interval = cfg.statistic == PermStatistic::GkcpInterval;
    let observed = if interval {
        interval_maxima(g, ctx, None)
    } else {
        scan_maxima(g, ctx, None)
    };
    let observed = pick(&observed, cfg.statistic, wi);
    let draws: Vec<f64> = permutation_maxima(g, ctx, cfg.n_perm, cfg.seed, interval)
        .iter()
        .map(|m| pick(m, cfg.statistic, wi))
        .collect();
    Ok(PermOutcome {
        p: add_one_pvalue(observed, &draws),
        observed,
        draws,
    })
}
