// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the statistics are computed in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Scalar>(x: usize) -> T {
    T::from_usize(x).expect("count representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Scalar> FromIterator<T> for KahanSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Standard normal density.
pub fn norm_pdf<T: Scalar>(x: T) -> T {
    let x = to_f64(x);
    lit((-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

/// Standard normal distribution function.
pub fn norm_cdf<T: Scalar>(x: T) -> T {
    let x = to_f64(x);
    lit(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
}

/// Falling factorial `x (x-1) ... (x-k+1)`; zero once a factor hits zero.
pub(crate) fn falling<T: Scalar>(x: usize, k: usize) -> T {
    if k > x {
        return T::zero();
    }
    (0..k).fold(T::one(), |acc, i| acc * count::<T>(x - i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = KahanSum::<f64>::new();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.total(), 1000.0);
    }

    #[test]
    fn normal_reference_values() {
        assert!(
            (norm_cdf(1.0f64) - 0.841_344_746_068_542_9).abs() < 1e-15,
            "{}",
            norm_cdf(1.0f64)
        );
        assert!((norm_pdf(1.0f64) - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert!((norm_cdf(0.0f32) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling::<f64>(6, 3), 120.0);
        assert_eq!(falling::<f64>(2, 3), 0.0);
        assert_eq!(falling::<f64>(5, 0), 1.0);
    }
}
