// SPDX-License-Identifier: MIT OR Apache-2.0

use super::*;
use crate::gram::{gaussian_gram, Sequence};
use crate::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gram(n: usize, seed: u64) -> GramSummary<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 3;
    let v = (0..n * d)
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    gaussian_gram(&Sequence::new(n, d, v).unwrap(), None).unwrap()
}

fn constant_gram(n: usize, c: f64) -> GramSummary<f64> {
    let mut k = vec![c; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
    }
    GramSummary::from_kernel(n, k).unwrap()
}

#[test]
fn split_weights_invariants() {
    let w = SplitWeights::<f64>::new(10, 4).unwrap();
    assert!((w.p1 - 12.0 / 90.0).abs() < 1e-15);
    assert!((w.p2 - w.p1 * 2.0 / 8.0).abs() < 1e-15);
    assert!((w.p3 - w.p2 / 7.0).abs() < 1e-15);
    let m = SplitWeights::<f64>::new(10, 6).unwrap();
    assert_eq!((w.q1, w.q2, w.q3), (m.p1, m.p2, m.p3));
    assert!(SplitWeights::<f64>::new(10, 1).is_err());
    assert!(SplitWeights::<f64>::new(10, 9).is_err());
}

#[test]
fn constant_kernel_has_no_spread() {
    let g = constant_gram(9, 0.3);
    let m = alpha_beta_moments(&g, 4).unwrap();
    assert!((m.mean_alpha - 0.3).abs() < 1e-15);
    assert!(m.var_alpha.abs() < 1e-15);
    assert!(m.cov_ab.abs() < 1e-15);
    assert!(matches!(
        third_moments(&g, 4, 1.2),
        Err(Error::ZeroVariance { .. })
    ));
}

#[test]
fn alpha_beta_matches_subset_enumeration() {
    let g = random_gram(6, 1);
    let m = alpha_beta_moments(&g, 3).unwrap();
    let o = oracle::split_oracle(g.matrix(), 6, 3, (1.0, -1.0), (1.0, 1.0));
    assert!((m.var_alpha - o.var_alpha).abs() < 1e-12);
    assert!((m.var_beta - o.var_beta).abs() < 1e-12);
    assert!((m.cov_ab - o.cov_ab).abs() < 1e-12);
    assert!((m.mean_alpha - o.mean_alpha).abs() < 1e-12);
}

#[test]
fn alpha_beta_swap_under_reflection() {
    let g = random_gram(11, 2);
    for t in 2..=9 {
        let a = alpha_beta_moments(&g, t).unwrap();
        let b = alpha_beta_moments(&g, 11 - t).unwrap();
        assert!((a.var_alpha - b.var_beta).abs() < 1e-14);
    }
}

#[test]
fn mean_d_vanishes_at_midpoint() {
    let g = random_gram(10, 3);
    let m = dw_moments(&g, 5, 1.2).unwrap();
    assert!(m.mean_d.abs() < 1e-12);
}

#[test]
fn dw_moments_match_enumeration() {
    let g = random_gram(6, 4);
    let r = 1.2;
    let m = dw_moments(&g, 3, r).unwrap();
    let o = oracle::split_oracle(g.matrix(), 6, 3, (1.0, -1.0), w_coefficients(6, 3, r));
    assert!((m.var_wr - o.var_w).abs() < 1e-12);
    assert!((m.mean_wr - o.mean_w).abs() < 1e-12);
    assert!((m.var_d - o.var_d).abs() < 1e-12);
}

#[test]
fn w1_is_uncorrelated_with_d() {
    let g = random_gram(9, 5);
    for t in 2..=7 {
        let ab = alpha_beta_moments(&g, t).unwrap();
        let (da, db) = d_coefficients::<f64>();
        let (wa, wb) = w_coefficients(9, t, 1.0);
        let (_, v_sum) = ab.linear(9, da + wa, db + wb);
        let (_, vd) = ab.linear(9, da, db);
        let (_, vw) = ab.linear(9, wa, wb);
        assert!((v_sum - vd - vw).abs() < 1e-10 * (vd + vw), "t = {t}");
    }
}

#[test]
fn skewness_matches_enumeration_and_flips_sign() {
    let n = 8;
    let g = random_gram(n, 6);
    let sk = third_moments(&g, 4, 1.2).unwrap();
    let o = oracle::split_oracle(g.matrix(), n, 4, (1.0, -1.0), w_coefficients(n, 4, 1.2));
    assert!((sk.skew_d - o.skew_d).abs() < 1e-10);
    assert!((sk.skew_wr - o.skew_w).abs() < 1e-10);
    for t in 2..=6 {
        let a = third_moments(&g, t, 1.0).unwrap().skew_d;
        let b = third_moments(&g, n - t, 1.0).unwrap().skew_d;
        assert!((a + b).abs() < 1e-10);
    }
}

#[test]
fn cross_correlation_matches_enumeration() {
    let n = 8;
    let g = random_gram(n, 7);
    let r = 0.8;
    let c = cross_correlation(&g, 3, 5, r).unwrap();
    let od = oracle::cross_oracle(g.matrix(), n, 3, 5, (1.0, -1.0), (1.0, -1.0));
    let ow = oracle::cross_oracle(
        g.matrix(),
        n,
        3,
        5,
        w_coefficients(n, 3, r),
        w_coefficients(n, 5, r),
    );
    assert!((c.rho_d - od).abs() < 1e-10);
    assert!((c.rho_wr - ow).abs() < 1e-10);
    let adj = cross_correlation(&g, 4, 5, r).unwrap();
    assert!(adj.rho_d > 0.0 && adj.rho_d < 1.0);
    assert!(cross_correlation(&g, 5, 5, r).is_err());
}

#[test]
fn exact_d_correlation_has_closed_form() {
    let n = 40;
    let g = random_gram(n, 8);
    for (s, t) in [(5, 9), (10, 30), (20, 21)] {
        let c = cross_correlation(&g, s, t, 1.0).unwrap();
        let (s, t, n) = (s as f64, t as f64, n as f64);
        let want = (s * (n - t) / ((n - s) * t)).sqrt();
        assert!((c.rho_d - want).abs() < 1e-12);
    }
}

#[test]
fn engine_variance_agrees_with_closed_forms() {
    let n = 30;
    let g = random_gram(n, 9);
    let agg = g.centered();
    for t in [2, 7, 15, 28] {
        let law = LabelLaw::<f64>::new(&[t, n - t], 4);
        let m = dw_moments(&g, t, 1.2).unwrap();
        for ((ca, cb), want) in [
            (d_coefficients(), m.var_d),
            (w_coefficients(n, t, 1.2), m.var_wr),
        ] {
            let w = split_weights(1, ca, cb);
            let got = second_moment(agg, &law, &w, &w);
            assert!((got - want).abs() < 1e-9 * want, "t = {t}: {got} vs {want}");
        }
    }
}

#[test]
fn psd_covariance_on_random_grams() {
    for seed in 0..10 {
        let g = random_gram(12, 100 + seed);
        for t in 2..=10 {
            let m = alpha_beta_moments(&g, t).unwrap();
            assert!(m.var_alpha >= 0.0 && m.var_beta >= 0.0);
            assert!(m.var_alpha * m.var_beta - m.cov_ab * m.cov_ab >= -1e-12);
        }
    }
}

#[test]
fn near_complete_split_shrinks_alpha_spread() {
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut k = vec![1.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 + 0.01 * (rng.random::<f64>() - 0.5);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let g = GramSummary::from_kernel(n, k).unwrap();
    let early = alpha_beta_moments(&g, 2).unwrap().var_alpha;
    let late = alpha_beta_moments(&g, n - 2).unwrap().var_alpha;
    assert!(late < early / 50.0);
}

#[test]
fn limit_correlations() {
    assert!((rho_d_limit(0.3, 0.3) - 1.0).abs() < 1e-15);
    assert!((rho_d_limit(0.2, 0.5) - rho_d_limit(0.5, 0.2)).abs() < 1e-15);
    for &(r, r1, r2) in &[(1.2, 1.0, 3.0), (0.8, 0.5, 10.0)] {
        let v = rho_w_limit(0.4, 0.4, r, r1, r2);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
}

#[test]
fn large_n_d_correlation_approaches_limit() {
    let n = 2000;
    let g = random_gram(n, 11);
    for (s, t) in [(400, 800), (1000, 1500), (1200, 1600)] {
        let c = cross_correlation(&g, s, t, 1.0).unwrap();
        let want = rho_d_limit(s as f64 / n as f64, t as f64 / n as f64);
        assert!((c.rho_d - want).abs() < 0.01);
    }
}

#[test]
fn large_n_w_correlation_approaches_limit() {
    let n = 600;
    let g = random_gram(n, 12);
    let (r1, r2) = limit_kernel_summaries(&g);
    for r in [0.8, 1.2] {
        for (s, t) in [(150, 300), (300, 420)] {
            let c = cross_correlation(&g, s, t, r).unwrap();
            let want = rho_w_limit(s as f64 / n as f64, t as f64 / n as f64, r, r1, r2);
            assert!(
                (c.rho_wr - want).abs() < 0.02,
                "r = {r}: {} vs {want}",
                c.rho_wr
            );
        }
    }
}
