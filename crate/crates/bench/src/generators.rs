// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic sequences with a single planted distribution change.
//!
//! Rows `0..tau` come from `F0` and rows `tau..n` from `F1`. The base
//! covariance is `Sigma[i][j] = 0.4^|i-j|`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use gkcp::Sequence;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Correlation between neighbouring coordinates.
pub const RHO: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `N(0, Sigma)` vs `N(a 1, sigma2 Sigma)`.
    GaussianType1,
    /// `N(0, Sigma)` vs `N(a nu, sigma2 Sigma)`, `nu` half zeros, half ones.
    GaussianType2,
    /// `Sigma^{1/2} u` vs `(sigma2 Sigma)^{1/2} u + a 1`, `u` i.i.d. chi-square(3).
    ChiSquare,
    /// `exp(N(0, Sigma))` vs `exp(N(a 1, Sigma))`.
    LogNormal,
    /// Multivariate t with `df` degrees of freedom and scale `Sigma`;
    /// post-change `a 1 + sqrt(sigma2) x`.
    MultivariateT,
}

impl std::str::FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian_type1" => Family::GaussianType1,
            "gaussian_type2" => Family::GaussianType2,
            "chi_square" => Family::ChiSquare,
            "log_normal" => Family::LogNormal,
            "multivariate_t" => Family::MultivariateT,
            other => return Err(BenchError::InvalidSpec(format!("unknown family '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub d: usize,
    pub n: usize,
    /// Number of pre-change rows; `None` for no change.
    pub tau: Option<usize>,
    /// Euclidean norm of the mean shift.
    pub delta: f64,
    pub sigma2: f64,
    pub df: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// A no-change spec of the given family.
    pub fn null(family: Family, n: usize, d: usize) -> Self {
        Self {
            family,
            d,
            n,
            tau: None,
            delta: 0.0,
            sigma2: 1.0,
            df: 5.0,
            seed: 0,
        }
    }

    /// A change at `n / 2`.
    pub fn centered(family: Family, n: usize, d: usize, delta: f64, sigma2: f64) -> Self {
        Self {
            tau: Some(n / 2),
            delta,
            sigma2,
            ..Self::null(family, n, d)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.n < 4 {
            return bad(format!("n = {} is below 4", self.n));
        }
        if let Some(tau) = self.tau {
            if tau > self.n {
                return bad(format!("tau = {tau} exceeds n = {}", self.n));
            }
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad(format!("delta = {} must be finite and >= 0", self.delta));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return bad(format!("sigma2 = {} must be positive", self.sigma2));
        }
        if self.family == Family::MultivariateT && !(self.df.is_finite() && self.df > 0.0) {
            return bad(format!("df = {} must be positive", self.df));
        }
        if self.family == Family::GaussianType2 && self.d < 2 {
            return bad("gaussian_type2 needs d >= 2".into());
        }
        Ok(())
    }

    /// Per-coordinate post-change mean shift.
    pub fn shift_vector(&self) -> Vec<f64> {
        match self.family {
            Family::GaussianType2 => {
                let zeros = self.d / 2;
                let a = self.delta / ((self.d - zeros) as f64).sqrt();
                (0..self.d)
                    .map(|j| if j < zeros { 0.0 } else { a })
                    .collect()
            }
            _ => vec![self.delta / (self.d as f64).sqrt(); self.d],
        }
    }
}

/// Fills `out` with a draw from `N(0, Sigma)` by the AR(1) recursion,
/// which has exactly the covariance `0.4^|i-j|`.
fn ar1_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let innov = (1.0 - RHO * RHO).sqrt();
    let mut prev = 0.0;
    for (j, x) in out.iter_mut().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        prev = if j == 0 { z } else { RHO * prev + innov * z };
        *x = prev;
    }
}

/// `Sigma` for dimension `d`.
pub fn sigma(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| RHO.powi(i.abs_diff(j) as i32))
}

/// Symmetric square root of `Sigma`, cached per dimension.
pub fn sigma_sqrt(d: usize) -> Arc<DMatrix<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&d) {
        return Arc::clone(m);
    }
    let eig = sigma(d).symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    let root = Arc::new(root);
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .entry(d)
        .or_insert_with(|| Arc::clone(&root));
    root
}

pub fn generate(spec: &GeneratorSpec) -> Result<Sequence<f64>> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let tau = spec.tau.unwrap_or(n);
    let shift = spec.shift_vector();
    let scale = spec.sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = vec![0.0; n * d];
    match spec.family {
        Family::ChiSquare => {
            let chi = ChiSquared::new(3.0).map_err(|e| BenchError::InvalidSpec(e.to_string()))?;
            let u = DMatrix::from_fn(d, n, |_, _| chi.sample(&mut rng));
            let x = sigma_sqrt(d).as_ref() * u;
            for i in 0..n {
                let post = i >= tau;
                for j in 0..d {
                    values[i * d + j] = if post {
                        scale * x[(j, i)] + shift[j]
                    } else {
                        x[(j, i)]
                    };
                }
            }
        }
        Family::MultivariateT => {
            let chi =
                ChiSquared::new(spec.df).map_err(|e| BenchError::InvalidSpec(e.to_string()))?;
            for (i, row) in values.chunks_mut(d).enumerate() {
                ar1_normal(&mut rng, row);
                let w = (chi.sample(&mut rng) / spec.df).sqrt();
                let post = i >= tau;
                for (x, s) in row.iter_mut().zip(&shift) {
                    *x /= w;
                    if post {
                        *x = scale * *x + s;
                    }
                }
            }
        }
        Family::GaussianType1 | Family::GaussianType2 | Family::LogNormal => {
            let log = spec.family == Family::LogNormal;
            for (i, row) in values.chunks_mut(d).enumerate() {
                ar1_normal(&mut rng, row);
                let post = i >= tau;
                for (x, s) in row.iter_mut().zip(&shift) {
                    if post {
                        *x = if log { *x + s } else { scale * *x + s };
                    }
                    if log {
                        *x = x.exp();
                    }
                }
            }
        }
    }
    Ok(Sequence::new(n, d, values)?)
}
