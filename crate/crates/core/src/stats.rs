//! Summary statistics and the goodness-of-fit tests used by the diagnostics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Default confidence level of reported intervals.
pub const DEFAULT_LEVEL: f64 = 0.99;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub value: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    pub n: usize,
    pub level: f64,
}

impl EstimateCI {
    pub fn from_summary(s: &Summary) -> Self {
        Self {
            value: s.mean(),
            stderr: s.stderr(),
            n: s.count(),
            level: DEFAULT_LEVEL,
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    /// Two-sided normal quantile for `level`.
    pub fn z(&self) -> f64 {
        Normal::standard().inverse_cdf(0.5 + self.level / 2.0)
    }

    pub fn interval(&self) -> (f64, f64) {
        let h = self.z() * self.stderr;
        (self.value - h, self.value + h)
    }

    pub fn overlaps(&self, other: &EstimateCI) -> bool {
        let (a0, a1) = self.interval();
        let (b0, b1) = other.interval();
        a0 <= b1 && b0 <= a1
    }

    /// Within `k` standard errors of a fixed target.
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }

    /// Within `k` combined standard errors of another estimate.
    pub fn agrees_with(&self, other: &EstimateCI, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.stderr.hypot(other.stderr)
    }

    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.value.abs()
    }
}

/// Streaming mean/variance (Welford) with an order-dependent, deterministic merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: Summary) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Summary {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut s = Summary::new();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Two-sample chi-squared homogeneity test on integer counts.
///
/// Values are binned individually; sparse tail bins are pooled until each
/// pooled bin has expected count at least 5 in both samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

pub fn chi_squared_two_sample(a: &[usize], b: &[usize]) -> ChiSquaredTest {
    let max = a.iter().chain(b).copied().max().unwrap_or(0);
    let mut ha = vec![0.0; max + 1];
    let mut hb = vec![0.0; max + 1];
    a.iter().for_each(|&k| ha[k] += 1.0);
    b.iter().for_each(|&k| hb[k] += 1.0);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb) = (0.0, 0.0);
    for k in 0..=max {
        ca += ha[k];
        cb += hb[k];
        let tot = ca + cb;
        if tot * na.min(nb) / n >= 5.0 {
            bins.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
        }
    }
    if ca + cb > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => bins.push((ca, cb)),
        }
    }

    let statistic: f64 = bins
        .iter()
        .map(|&(oa, ob)| {
            let tot = oa + ob;
            let ea = tot * na / n;
            let eb = tot * nb / n;
            (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb
        })
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map(|d| d.sf(statistic))
            .unwrap_or(f64::NAN)
    };
    ChiSquaredTest {
        statistic,
        dof,
        p_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn summary_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let whole: Summary = xs.iter().copied().collect();
        let mut left: Summary = xs[..37].iter().copied().collect();
        left.merge(xs[37..].iter().copied().collect());
        assert_relative_eq!(whole.mean(), left.mean(), epsilon = 1e-14);
        assert_relative_eq!(whole.variance(), left.variance(), epsilon = 1e-14);
        assert_eq!(left.count(), 100);
    }

    #[test]
    fn interval_at_99_percent() {
        let e = EstimateCI {
            value: 1.0,
            stderr: 0.1,
            n: 10,
            level: 0.99,
        };
        let (lo, hi) = e.interval();
        assert_relative_eq!(hi - 1.0, 0.2575829, epsilon = 1e-6);
        assert_relative_eq!(1.0 - lo, 0.2575829, epsilon = 1e-6);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert_relative_eq!(d, 0.5 / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn chi_squared_identical_samples() {
        let a: Vec<usize> = (0..1000).map(|i| i % 7).collect();
        let t = chi_squared_two_sample(&a, &a);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 6);
        assert_relative_eq!(t.p_value, 1.0);
    }

    #[test]
    fn chi_squared_detects_shift() {
        let a: Vec<usize> = (0..2000).map(|i| i % 5).collect();
        let b: Vec<usize> = (0..2000).map(|i| i % 5 + 1).collect();
        assert!(chi_squared_two_sample(&a, &b).p_value < 1e-6);
    }
}
