//! Small statistics helpers used by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn z_value(level: f64) -> f64 {
    std_normal().inverse_cdf(0.5 + level / 2.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `mean ± z·se`.
pub fn normal_interval(center: f64, se: f64, level: f64) -> Interval {
    let h = z_value(level) * se;
    Interval {
        level,
        lo: center - h,
        hi: center + h,
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, level: f64) -> Interval {
    if n == 0 {
        return Interval { level, lo: 0.0, hi: 1.0 };
    }
    let z = z_value(level);
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    Interval {
        level,
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

/// Kolmogorov distance between the empirical law of `xs` and the standard normal.
pub fn ks_distance_normal(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let normal = std_normal();
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic `D`.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2 j² λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test: statistic and asymptotic p-value (with the usual
/// small-sample correction of the argument). Ties make it conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = ks_two_sample_statistic(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ne = (na * nb / (na + nb)).sqrt();
    (d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d))
}

/// Lag-`k` sample autocorrelation.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    if xs.len() <= lag + 1 {
        return 0.0;
    }
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = xs.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    num / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_values() {
        assert!((z_value(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((z_value(0.99) - 2.575_829_303_548_901).abs() < 1e-9);
    }

    #[test]
    fn wilson_reference_values() {
        // 0 of 10 at 95%: upper end z²/(n + z²)
        let w = wilson_interval(0, 10, 0.95);
        let z2 = z_value(0.95).powi(2);
        assert!(w.lo.abs() < 1e-12);
        assert!((w.hi - z2 / (10.0 + z2)).abs() < 1e-12);
        let w = wilson_interval(5, 10, 0.95);
        assert!((w.lo + w.hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_tail_reference() {
        // Q(1.36) ≈ 0.0494, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn two_sample_statistic_by_hand() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.5, 3.5, 4.5, 5.5];
        // after 3: F_a = 1, F_b = 1/4
        assert!((ks_two_sample_statistic(&a, &b) - 0.75).abs() < 1e-12);
        assert_eq!(ks_two_sample_statistic(&a, &a), 0.0);
    }

    #[test]
    fn ks_normal_on_quantiles_is_small() {
        let n = 1000;
        let normal = std_normal();
        let xs: Vec<f64> = (0..n).map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        assert!(ks_distance_normal(&xs) <= 0.5 / n as f64 + 1e-9);
    }

    #[test]
    fn autocorrelation_of_alternating_sequence() {
        let xs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((autocorrelation(&xs, 1) + 0.99).abs() < 1e-9);
    }
}
