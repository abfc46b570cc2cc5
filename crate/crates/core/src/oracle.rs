// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exhaustive-enumeration reference values for small `n`.
//!
//! Everything here works directly on the raw kernel matrix and visits every
//! distinct labeling of positions, so it shares no algebra with the closed
//! forms it is used to check. Cost grows like a multinomial coefficient;
//! keep `n <= 10`.

/// Every way to assign labels `0..sizes.len()` to `n = sum(sizes)` positions
/// with exactly `sizes[c]` positions carrying label `c`.
pub fn labelings(sizes: &[usize]) -> Vec<Vec<u8>> {
    fn rec(rem: &mut [usize], cur: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..rem.len() {
            if rem[c] > 0 {
                rem[c] -= 1;
                cur.push(c as u8);
                rec(rem, cur, n, out);
                cur.pop();
                rem[c] += 1;
            }
        }
    }
    let n = sizes.iter().sum();
    let mut out = Vec::new();
    rec(&mut sizes.to_vec(), &mut Vec::with_capacity(n), n, &mut out);
    out
}

/// Ordered-pair kernel total over positions whose label satisfies `pick`.
fn within(k: &[f64], n: usize, labels: &[u8], pick: impl Fn(u8) -> bool) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        if !pick(labels[i]) {
            continue;
        }
        for j in 0..n {
            if j != i && pick(labels[j]) {
                s += k[i * n + j];
            }
        }
    }
    s
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn central(xs: &[f64], m: f64, p: i32) -> f64 {
    xs.iter().map(|x| (x - m).powi(p)).sum::<f64>() / xs.len() as f64
}

fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.len() as f64
}

/// Null moments of one split, by enumeration of all `C(n, t)` subsets.
#[derive(Clone, Copy, Debug)]
pub struct SplitOracle {
    pub mean_alpha: f64,
    pub mean_beta: f64,
    pub var_alpha: f64,
    pub var_beta: f64,
    pub cov_ab: f64,
    pub mean_d: f64,
    pub var_d: f64,
    pub mean_w: f64,
    pub var_w: f64,
    pub skew_d: f64,
    pub skew_w: f64,
}

/// `(c_a, c_b)` pairs define `D` and `W` as `c_a A + c_b B`.
pub fn split_oracle(
    k: &[f64],
    n: usize,
    t: usize,
    d_coef: (f64, f64),
    w_coef: (f64, f64),
) -> SplitOracle {
    let sa = (t * (t - 1)) as f64;
    let sb = ((n - t) * (n - t - 1)) as f64;
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for lab in labelings(&[t, n - t]) {
        alpha.push(within(k, n, &lab, |c| c == 0) / sa);
        beta.push(within(k, n, &lab, |c| c == 1) / sb);
    }
    let lin = |c: (f64, f64)| -> Vec<f64> {
        alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| c.0 * a * sa + c.1 * b * sb)
            .collect()
    };
    let d = lin(d_coef);
    let w = lin(w_coef);
    let (ma, mb, md, mw) = (mean(&alpha), mean(&beta), mean(&d), mean(&w));
    let (vd, vw) = (central(&d, md, 2), central(&w, mw, 2));
    SplitOracle {
        mean_alpha: ma,
        mean_beta: mb,
        var_alpha: central(&alpha, ma, 2),
        var_beta: central(&beta, mb, 2),
        cov_ab: covariance(&alpha, &beta),
        mean_d: md,
        var_d: vd,
        mean_w: mw,
        var_w: vw,
        skew_d: central(&d, md, 3) / vd.powf(1.5),
        skew_w: central(&w, mw, 3) / vw.powf(1.5),
    }
}

/// Correlation of a linear split statistic at `s` and at `t > s`, enumerating
/// the three-way partition `<= s`, `(s, t]`, `> t`.
pub fn cross_oracle(
    k: &[f64],
    n: usize,
    s: usize,
    t: usize,
    coef_s: (f64, f64),
    coef_t: (f64, f64),
) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for lab in labelings(&[s, t - s, n - t]) {
        xs.push(
            coef_s.0 * within(k, n, &lab, |c| c == 0) + coef_s.1 * within(k, n, &lab, |c| c != 0),
        );
        ys.push(
            coef_t.0 * within(k, n, &lab, |c| c != 2) + coef_t.1 * within(k, n, &lab, |c| c == 2),
        );
    }
    covariance(&xs, &ys) / (covariance(&xs, &xs) * covariance(&ys, &ys)).sqrt()
}

/// Direct `(alpha, beta, gamma)` of one split of the identity ordering.
pub fn direct_split(k: &[f64], n: usize, t: usize) -> (f64, f64, f64) {
    let lab: Vec<u8> = (0..n).map(|i| u8::from(i >= t)).collect();
    let a = within(k, n, &lab, |c| c == 0) / (t * (t - 1)) as f64;
    let b = within(k, n, &lab, |c| c == 1) / ((n - t) * (n - t - 1)) as f64;
    let mut cross = 0.0;
    for i in 0..t {
        for j in t..n {
            cross += k[i * n + j];
        }
    }
    (a, b, cross / (t * (n - t)) as f64)
}

/// Direct `(alpha, beta)` for the interval `(t1, t2]` against its complement.
pub fn direct_interval(k: &[f64], n: usize, t1: usize, t2: usize) -> (f64, f64) {
    let lab: Vec<u8> = (0..n).map(|i| u8::from(!(i >= t1 && i < t2))).collect();
    let m = t2 - t1;
    let a = within(k, n, &lab, |c| c == 0) / (m * (m - 1)) as f64;
    let b = within(k, n, &lab, |c| c == 1) / ((n - m) * (n - m - 1)) as f64;
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeling_counts_are_multinomial() {
        assert_eq!(labelings(&[3, 3]).len(), 20);
        assert_eq!(labelings(&[3, 2, 3]).len(), 560);
    }
}
