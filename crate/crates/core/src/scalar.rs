//! Scalar abstraction for the numeric (non-simulation) parts of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by the comparison chain and the statistics helpers.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every float type")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every float type")
    }

    fn half() -> Self {
        Self::from_f64_lossy(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<R> {
    sum: R,
    compensation: R,
}

impl<R: Real> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> CompensatedSum<R> {
    pub fn new() -> Self {
        CompensatedSum {
            sum: R::zero(),
            compensation: R::zero(),
        }
    }

    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> R {
        self.sum + self.compensation
    }
}

impl<R: Real> FromIterator<R> for CompensatedSum<R> {
    fn from_iter<I: IntoIterator<Item = R>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<R: Real, I: IntoIterator<Item = R>>(iter: I) -> R {
    iter.into_iter().collect::<CompensatedSum<R>>().value()
}

/// Largest `r` with `r^k <= n`, verified in integers so that floating point
/// roots landing just below an exact integer cannot shift the floor.
pub fn integer_root_floor(n: u64, k: u32) -> u64 {
    assert!(k >= 1, "root index must be positive");
    if k == 1 || n < 2 {
        return n;
    }
    let pow_le = |r: u64| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..k {
            acc *= r as u128;
            if acc > n as u128 {
                return false;
            }
        }
        true
    };
    let mut r = (n as f64).powf(1.0 / k as f64).floor() as u64;
    while r > 0 && !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_roots_on_exact_powers() {
        assert_eq!(integer_root_floor(16, 4), 2);
        assert_eq!(integer_root_floor(15, 4), 1);
        assert_eq!(integer_root_floor(81, 4), 3);
        assert_eq!(integer_root_floor(80, 4), 2);
        assert_eq!(integer_root_floor(1_000_000, 3), 100);
        assert_eq!(integer_root_floor(999_999, 3), 99);
        assert_eq!(integer_root_floor(0, 5), 0);
        assert_eq!(integer_root_floor(1, 5), 1);
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let terms = [1.0f64, 1e-17, 1e-17, 1e-17, -1.0];
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 0.0);
        let s = compensated_sum(terms.iter().copied());
        assert!((s - 3e-17).abs() < 1e-30);
    }
}
