//! Small statistics toolkit: interval estimates, quantiles and
//! Kolmogorov–Smirnov statistics with asymptotic p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::scalar::{compensated_sum, Real};

/// Two-sided standard normal critical value for confidence `level`.
pub fn z_for_confidence(level: f64) -> f64 {
    assert!(
        level > 0.0 && level < 1.0,
        "confidence level must be in (0, 1)"
    );
    Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Point estimate with a confidence interval and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    pub seed_first: u64,
    pub seed_count: u64,
}

impl EstimateReport {
    pub fn new(estimate: f64, ci: (f64, f64), samples: usize, master_seed: u64) -> Self {
        assert!(samples > 0, "an estimate needs at least one sample");
        EstimateReport {
            estimate,
            ci_low: ci.0.min(estimate),
            ci_high: ci.1.max(estimate),
            samples,
            seed_first: master_seed,
            seed_count: samples as u64,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    /// Binomial proportion with a Wilson interval.
    pub fn proportion(successes: usize, trials: usize, z: f64, master_seed: u64) -> Self {
        let p = successes as f64 / trials as f64;
        EstimateReport::new(
            p,
            wilson_interval(successes, trials, z),
            trials,
            master_seed,
        )
    }

    /// Sample mean with a normal-approximation interval.
    pub fn mean(samples: &[f64], z: f64, master_seed: u64) -> Self {
        let (m, lo, hi) = mean_interval(samples, z);
        EstimateReport::new(m, (lo, hi), samples.len(), master_seed)
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval<R: Real>(successes: usize, trials: usize, z: R) -> (R, R) {
    assert!(trials > 0, "Wilson interval needs at least one trial");
    let n = R::from_usize_lossy(trials);
    let p = R::from_usize_lossy(successes) / n;
    let two = R::one() + R::one();
    let four = two + two;
    let z2 = z * z;
    let denom = R::one() + z2 / n;
    let center = (p + z2 / (two * n)) / denom;
    let half = z * ((p * (R::one() - p) / n + z2 / (four * n * n)).sqrt()) / denom;
    let lo = (center - half).max(R::zero());
    let hi = (center + half).min(R::one());
    (lo, hi)
}

pub fn mean<R: Real>(xs: &[R]) -> R {
    compensated_sum(xs.iter().copied()) / R::from_usize_lossy(xs.len())
}

/// Unbiased sample variance.
pub fn variance<R: Real>(xs: &[R]) -> R {
    let n = xs.len();
    if n < 2 {
        return R::zero();
    }
    let m = mean(xs);
    compensated_sum(xs.iter().map(|&x| (x - m) * (x - m))) / R::from_usize_lossy(n - 1)
}

/// `(mean, low, high)` with half-width `z * sd / sqrt(n)`.
pub fn mean_interval<R: Real>(xs: &[R], z: R) -> (R, R, R) {
    let m = mean(xs);
    let half = z * (variance(xs) / R::from_usize_lossy(xs.len())).sqrt();
    (m, m - half, m + half)
}

/// Empirical quantile (type 7, linear interpolation) of sorted data.
pub fn quantile_sorted<R: Real>(sorted: &[R], q: R) -> R {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = R::from_usize_lossy(sorted.len() - 1) * q;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - lo) * (sorted[j] - sorted[i])
}

pub fn sorted<R: Real>(xs: &[R]) -> Vec<R> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

/// Distribution-free interval for the `q`-quantile from order statistics,
/// using the normal approximation to the binomial rank distribution.
pub fn quantile_interval<R: Real>(sorted: &[R], q: R, z: R) -> (R, R) {
    let n = R::from_usize_lossy(sorted.len());
    let center = n * q;
    let half = z * (n * q * (R::one() - q)).sqrt();
    let last = sorted.len() - 1;
    let idx = |x: R| -> usize { x.max(R::zero()).to_usize().unwrap_or(0).min(last) };
    let lo = idx((center - half).floor() - R::one());
    let hi = idx((center + half).ceil());
    (sorted[lo], sorted[hi])
}

/// `sup_x |F_n(x) - F(x)|` for a continuous reference CDF.
pub fn ks_statistic<R: Real>(samples: &[R], cdf: impl Fn(R) -> R) -> R {
    let xs = sorted(samples);
    let n = R::from_usize_lossy(xs.len());
    let mut d = R::zero();
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let below = R::from_usize_lossy(i) / n;
        let above = R::from_usize_lossy(i + 1) / n;
        d = d.max((f - below).abs()).max((above - f).abs());
    }
    d
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`; ties are handled by
/// advancing both empirical CDFs past equal values together.
pub fn ks_two_sample<R: Real>(a: &[R], b: &[R]) -> R {
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (R::from_usize_lossy(xa.len()), R::from_usize_lossy(xb.len()));
    let (mut i, mut j) = (0, 0);
    let mut d = R::zero();
    while i < xa.len() && j < xb.len() {
        let x = if xa[i] <= xb[j] { xa[i] } else { xb[j] };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        let diff = (R::from_usize_lossy(i) / na - R::from_usize_lossy(j) / nb).abs();
        d = d.max(diff);
    }
    d
}

/// Kolmogorov survival function `Q(t) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² t²)`.
pub fn kolmogorov_sf<R: Real>(t: R) -> R {
    if t <= R::zero() {
        return R::one();
    }
    let two = R::one() + R::one();
    let mut sum = R::zero();
    let mut sign = R::one();
    for k in 1..=200usize {
        let kf = R::from_usize_lossy(k);
        let term = (-two * kf * kf * t * t).exp();
        sum = sum + sign * term;
        if term < R::epsilon() * R::from_f64_lossy(1e-3) {
            break;
        }
        sign = -sign;
    }
    (two * sum).max(R::zero()).min(R::one())
}

/// Asymptotic p-value of a two-sample KS distance `d` (Stephens' correction).
pub fn ks_two_sample_pvalue<R: Real>(d: R, na: usize, nb: usize) -> R {
    let ne = R::from_usize_lossy(na) * R::from_usize_lossy(nb) / R::from_usize_lossy(na + nb);
    let root = ne.sqrt();
    let t = (root + R::from_f64_lossy(0.12) + R::from_f64_lossy(0.11) / root) * d;
    kolmogorov_sf(t)
}

/// Asymptotic p-value of a one-sample KS distance over `n` observations.
pub fn ks_one_sample_pvalue<R: Real>(d: R, n: usize) -> R {
    let root = R::from_usize_lossy(n).sqrt();
    let t = (root + R::from_f64_lossy(0.12) + R::from_f64_lossy(0.11) / root) * d;
    kolmogorov_sf(t)
}

/// Two-sample KS test: `(distance, p-value)`.
pub fn ks_two_sample_test<R: Real>(a: &[R], b: &[R]) -> (R, R) {
    let d = ks_two_sample(a, b);
    (d, ks_two_sample_pvalue(d, a.len(), b.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn z_values() {
        assert_relative_eq!(z_for_confidence(0.95), 1.959963984540054, epsilon = 1e-9);
        assert_relative_eq!(z_for_confidence(0.99), 2.5758293035489004, epsilon = 1e-9);
    }

    #[test]
    fn wilson_contains_point_and_clamps() {
        let (lo, hi) = wilson_interval(0, 10, 1.96f64);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.35);
        let (lo, hi) = wilson_interval(10, 10, 1.96f64);
        assert!(lo > 0.65 && hi == 1.0);
        let (lo, hi) = wilson_interval(50, 100, 1.96f32);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn quantiles() {
        let xs = sorted(&[3.0f64, 1.0, 2.0, 4.0]);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_relative_eq!(quantile_sorted(&xs, 0.5), 2.5);
        let many: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        let (lo, hi) = quantile_interval(&many, 0.5, 1.96);
        assert!(lo < 500.0 && hi > 500.0);
    }

    #[test]
    fn ks_point_mass_against_exponential() {
        let xs = vec![1.0f64; 50];
        let d = ks_statistic(&xs, |x: f64| 1.0 - (-x).exp());
        assert_relative_eq!(d, 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_and_disjoint() {
        let a = [1.0f64, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b = [4.0f64, 5.0];
        assert_eq!(ks_two_sample(&a, &b), 1.0);
        // integer-valued data with ties
        let c = [0.0f64, 0.0, 1.0, 1.0];
        let e = [0.0f64, 1.0, 1.0, 1.0];
        assert_relative_eq!(ks_two_sample(&c, &e), 0.25);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.0098 (classical critical values)
        assert!((kolmogorov_sf(1.36f64) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.63f64) - 0.0098).abs() < 5e-4);
        assert_eq!(kolmogorov_sf(0.0f64), 1.0);
    }

    #[test]
    fn report_invariants() {
        let r = EstimateReport::proportion(3, 10, 1.96, 0);
        assert!(r.contains(r.estimate));
        let m = EstimateReport::mean(&[1.0, 2.0, 3.0], 1.96, 0);
        assert_relative_eq!(m.estimate, 2.0);
        assert!(m.ci_low < 2.0 && m.ci_high > 2.0);
    }
}
