//! Parametric claim and shock laws.
//!
//! Every law is supported on `[0, inf)`. Besides sampling, the solvers need
//! the moment generating function together with its domain boundary
//! `s_max = sup{s : E[e^{sX}] < inf}`, the integrated tail, and exponential
//! tilting.

use rand::Rng;
use rand_distr::{Distribution as _, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{ensure, Error, Result};

/// Absolute accuracy requested from numerical quadrature.
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Lomax form: tail `(scale / (scale + x))^shape`, support from zero.
    Pareto {
        shape: f64,
        scale: f64,
    },
    /// Tail `exp(-(x / scale)^shape)` with `shape` in `(0, 1]`.
    Weibull {
        shape: f64,
        scale: f64,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        location: f64,
        scale: f64,
    },
    Deterministic {
        value: f64,
    },
    /// Density proportional to `e^{tilt x}` against `base`, `tilt <= 0`.
    /// Sampled by acceptance-rejection from `base`.
    Tilted {
        base: Box<DistributionSpec>,
        tilt: f64,
    },
}

use DistributionSpec::*;

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Self {
        Exponential { rate }
    }

    pub fn gamma(shape: f64, rate: f64) -> Self {
        Gamma { shape, rate }
    }

    pub fn pareto(shape: f64, scale: f64) -> Self {
        Pareto { shape, scale }
    }

    pub fn weibull(shape: f64, scale: f64) -> Self {
        Weibull { shape, scale }
    }

    pub fn lognormal(location: f64, scale: f64) -> Self {
        LogNormal { location, scale }
    }

    pub fn deterministic(value: f64) -> Self {
        Deterministic { value }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Exponential { rate } => {
                ensure(pos(rate), || format!("exponential rate {rate} must be > 0"))
            }
            Gamma { shape, rate } => ensure(pos(shape) && pos(rate), || {
                format!("gamma shape {shape} and rate {rate} must be > 0")
            }),
            Pareto { shape, scale } => {
                ensure(shape.is_finite() && shape > 1.0 && pos(scale), || {
                    format!("pareto needs shape > 1 (finite mean) and scale > 0, got shape {shape}, scale {scale}")
                })
            }
            Weibull { shape, scale } => {
                ensure(pos(shape) && shape <= 1.0 && pos(scale), || {
                    format!("weibull needs shape in (0, 1] and scale > 0, got shape {shape}, scale {scale}")
                })
            }
            LogNormal { location, scale } => ensure(location.is_finite() && pos(scale), || {
                format!("lognormal needs finite location and scale > 0, got {location}, {scale}")
            }),
            Deterministic { value } => ensure(value.is_finite() && value >= 0.0, || {
                format!("deterministic value {value} must be >= 0")
            }),
            Tilted { ref base, tilt } => {
                base.validate()?;
                ensure(tilt.is_finite() && tilt <= 0.0, || {
                    format!("acceptance-rejection tilt {tilt} must be <= 0")
                })
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Exponential { rate } => 1.0 / rate,
            Gamma { shape, rate } => shape / rate,
            Pareto { shape, scale } => scale / (shape - 1.0),
            Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            LogNormal { location, scale } => (location + 0.5 * scale * scale).exp(),
            Deterministic { value } => value,
            Tilted { ref base, tilt } => base.mgf_derivative(tilt) / base.mgf(tilt),
        }
    }

    /// `s_max`: the MGF is finite exactly on `(-inf, s_max)`.
    pub fn mgf_boundary(&self) -> f64 {
        match *self {
            Exponential { rate } | Gamma { rate, .. } => rate,
            Weibull { shape: 1.0, scale } => 1.0 / scale,
            Pareto { .. } | Weibull { .. } | LogNormal { .. } => 0.0,
            Deterministic { .. } => f64::INFINITY,
            Tilted { ref base, tilt } => base.mgf_boundary() - tilt,
        }
    }

    /// Heavy-tailed laws with no positive exponential moments.
    pub fn is_heavy_tailed(&self) -> bool {
        self.mgf_boundary() == 0.0
    }

    /// Pareto, lognormal and Weibull with shape below one.
    pub fn is_strongly_subexponential(&self) -> bool {
        match *self {
            Pareto { .. } | LogNormal { .. } => true,
            Weibull { shape, .. } => shape < 1.0,
            _ => false,
        }
    }

    /// `E[e^{sX}]`, or `f64::INFINITY` when `s >= s_max`.
    pub fn mgf(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        if let Tilted { ref base, tilt } = *self {
            return base.mgf(s + tilt) / base.mgf(tilt);
        }
        if s >= self.mgf_boundary() {
            return f64::INFINITY;
        }
        match *self {
            Exponential { rate } => rate / (rate - s),
            Gamma { shape, rate } => (rate / (rate - s)).powf(shape),
            Weibull { shape: 1.0, scale } => 1.0 / (1.0 - s * scale),
            Deterministic { value } => (s * value).exp(),
            Tilted { .. } => unreachable!(),
            // s < 0 here: E[e^{sX}] = 1 + s * int e^{sx} P(X > x) dx
            Pareto { .. } | Weibull { .. } | LogNormal { .. } => {
                1.0 + s * self.weighted_tail_integral(|x| (s * x).exp())
            }
        }
    }

    /// `E[X e^{sX}]`, or `f64::INFINITY` when `s >= s_max`.
    pub fn mgf_derivative(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.mean();
        }
        if s >= self.mgf_boundary() {
            return f64::INFINITY;
        }
        match *self {
            Exponential { rate } => rate / (rate - s).powi(2),
            Gamma { shape, rate } => shape * rate.powf(shape) / (rate - s).powf(shape + 1.0),
            Weibull { shape: 1.0, scale } => scale / (1.0 - s * scale).powi(2),
            Deterministic { value } => value * (s * value).exp(),
            Tilted { ref base, tilt } => base.mgf_derivative(s + tilt) / base.mgf(tilt),
            // d/dx (x e^{sx}) = (1 + s x) e^{sx}
            Pareto { .. } | Weibull { .. } | LogNormal { .. } => {
                self.weighted_tail_integral(|x| (1.0 + s * x) * (s * x).exp())
            }
        }
    }

    /// `int_0^inf w(x) P(X > x) dx` by double-exponential quadrature after
    /// mapping `[0, inf)` onto `[0, 1)`.
    fn weighted_tail_integral(&self, w: impl Fn(f64) -> f64) -> f64 {
        let m = self.mean();
        let f = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = m * t / (1.0 - t);
            let jac = m / ((1.0 - t) * (1.0 - t));
            let v = w(x) * self.survival(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        quadrature::double_exponential::integrate(f, 0.0, 1.0, QUAD_TOL).integral
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match *self {
            Exponential { rate } => (-rate * x).exp(),
            Gamma { shape, rate } => {
                if x == 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, rate * x)
                }
            }
            Pareto { shape, scale } => (scale / (scale + x)).powf(shape),
            Weibull { shape, scale } => (-(x / scale).powf(shape)).exp(),
            LogNormal { location, scale } => {
                if x == 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - location) / (scale * std::f64::consts::SQRT_2))
                }
            }
            Deterministic { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            // P(X > y) = (e^{ty} Fbar(y) + t int_y^inf e^{tx} Fbar(x) dx) / M(t)
            Tilted { ref base, tilt } => {
                let shifted = |z: f64| base.survival(x + z) * (tilt * (x + z)).exp();
                let m = base.mean().max(f64::MIN_POSITIVE);
                let g = |t: f64| {
                    if t >= 1.0 {
                        return 0.0;
                    }
                    let z = m * t / (1.0 - t);
                    let v = shifted(z) * m / ((1.0 - t) * (1.0 - t));
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                };
                let tail =
                    quadrature::double_exponential::integrate(g, 0.0, 1.0, QUAD_TOL).integral;
                ((tilt * x).exp() * base.survival(x) + tilt * tail) / base.mgf(tilt)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Gamma { shape, rate } if x > 0.0 => gamma_lr(shape, rate * x),
            _ => 1.0 - self.survival(x),
        }
    }

    /// `F^s(u) = (1/E[X]) int_0^u P(X > y) dy`.
    pub fn integrated_tail(&self, u: f64) -> Result<f64> {
        ensure(u >= 0.0, || {
            format!("integrated tail needs u >= 0, got {u}")
        })?;
        let mean = self.mean();
        ensure(mean > 0.0 && mean.is_finite(), || {
            "integrated tail undefined for a law with zero mean".to_string()
        })?;
        if u == 0.0 {
            return Ok(0.0);
        }
        let v = match *self {
            Exponential { rate } => -(-rate * u).exp_m1(),
            // int_0^u Fbar = u Q(k, ru) + (k/r) P(k+1, ru)
            Gamma { shape, rate } => {
                (u * gamma_ur(shape, rate * u) + shape / rate * gamma_lr(shape + 1.0, rate * u))
                    / mean
            }
            Pareto { shape, scale } => 1.0 - (scale / (scale + u)).powf(shape - 1.0),
            Weibull { shape, scale } => gamma_lr(1.0 / shape, (u / scale).powf(shape)),
            // int_0^u Fbar = u Fbar(u) + E[X; X <= u]
            LogNormal { location, scale } => {
                let z = (u.ln() - location) / scale;
                let phi = |v: f64| 0.5 * erfc(-v / std::f64::consts::SQRT_2);
                u * self.survival(u) / mean + phi(z - scale)
            }
            Deterministic { value } => u.min(value) / value,
            Tilted { .. } => {
                let f = |y: f64| self.survival(y);
                quadrature::double_exponential::integrate(f, 0.0, u, QUAD_TOL).integral / mean
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Law with density proportional to `e^{sx}` against this one.
    ///
    /// Exponential and gamma stay in family; point masses are unchanged;
    /// other laws are wrapped for acceptance-rejection, allowed only for `s <= 0`.
    pub fn exp_tilt(&self, s: f64) -> Result<DistributionSpec> {
        if let Tilted { ref base, tilt } = *self {
            return base.exp_tilt(tilt + s);
        }
        if s == 0.0 {
            return Ok(self.clone());
        }
        let boundary = self.mgf_boundary();
        if s.partial_cmp(&boundary) != Some(std::cmp::Ordering::Less) {
            return Err(Error::OutsideMgfDomain { s, boundary });
        }
        match *self {
            Exponential { rate } => Ok(Exponential { rate: rate - s }),
            Gamma { shape, rate } => Ok(Gamma {
                shape,
                rate: rate - s,
            }),
            Weibull { shape: 1.0, scale } => Ok(Exponential {
                rate: 1.0 / scale - s,
            }),
            Deterministic { value } => Ok(Deterministic { value }),
            Tilted { .. } => unreachable!(),
            Pareto { .. } | Weibull { .. } | LogNormal { .. } => {
                // s < boundary = 0
                Ok(Tilted {
                    base: Box::new(self.clone()),
                    tilt: s,
                })
            }
        }
    }

    /// Rate if this is an exponential law.
    pub fn exponential_rate(&self) -> Option<f64> {
        match *self {
            Exponential { rate } => Some(rate),
            Weibull { shape: 1.0, scale } => Some(1.0 / scale),
            Gamma { shape: 1.0, rate } => Some(rate),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .expect("validated")
                .sample(rng),
            Pareto { shape, scale } => {
                let v: f64 = 1.0 - rng.random::<f64>();
                scale * (v.powf(-1.0 / shape) - 1.0)
            }
            Weibull { shape, scale } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                scale * e.powf(1.0 / shape)
            }
            LogNormal { location, scale } => rand_distr::LogNormal::new(location, scale)
                .map(|d| d.sample(rng))
                .unwrap_or_else(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    (location + scale * z).exp()
                }),
            Deterministic { value } => value,
            Tilted { ref base, tilt } => loop {
                let x = base.sample(rng);
                if rng.random::<f64>() < (tilt * x).exp() {
                    break x;
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use crate::stats::{ks_statistic, Summary};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn zoo() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::exponential(1.3),
            DistributionSpec::gamma(2.5, 0.7),
            DistributionSpec::gamma(0.4, 2.0),
            DistributionSpec::pareto(2.0, 1.0),
            DistributionSpec::pareto(3.5, 2.0),
            DistributionSpec::weibull(0.5, 1.0),
            DistributionSpec::weibull(1.0, 2.0),
            DistributionSpec::lognormal(0.1, 0.8),
            DistributionSpec::deterministic(2.5),
        ]
    }

    #[test]
    fn deterministic_sample() {
        let mut rng = stream(0, 0);
        assert_eq!(DistributionSpec::deterministic(2.5).sample(&mut rng), 2.5);
    }

    fn empirical_mean(d: &DistributionSpec, n: usize, seed: u64) -> Summary {
        let mut rng = stream(seed, 0);
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn exponential_sample_mean() {
        let s = empirical_mean(&DistributionSpec::exponential(1.0), 100_000, 11);
        assert!((s.mean() - 1.0).abs() < 3.0 / (1e5f64).sqrt());
    }

    #[test]
    fn pareto_sample_mean() {
        // infinite variance: compare against the 3 empirical stderr band
        let s = empirical_mean(&DistributionSpec::pareto(2.0, 1.0), 100_000, 12);
        assert!(
            (s.mean() - 1.0).abs() < 3.0 * s.stderr(),
            "{} ± {}",
            s.mean(),
            s.stderr()
        );
    }

    #[test]
    fn samples_are_nonnegative() {
        let mut rng = stream(5, 0);
        for d in zoo() {
            for _ in 0..10_000 {
                assert!(d.sample(&mut rng) >= 0.0, "{d:?}");
            }
        }
    }

    #[test]
    fn mgf_values() {
        let e = DistributionSpec::exponential(1.0);
        assert_eq!(e.mgf(0.0), 1.0);
        assert_relative_eq!(e.mgf(0.5), 2.0, epsilon = 1e-15);
        assert!(e.mgf(1.0).is_infinite());
        assert!(DistributionSpec::pareto(2.0, 1.0).mgf(0.1).is_infinite());
        assert!(DistributionSpec::deterministic(3.0).mgf(50.0).is_finite());
    }

    #[test]
    fn mgf_boundaries() {
        assert_eq!(
            DistributionSpec::deterministic(1.0).mgf_boundary(),
            f64::INFINITY
        );
        assert_eq!(DistributionSpec::exponential(2.0).mgf_boundary(), 2.0);
        assert_eq!(DistributionSpec::gamma(3.0, 0.5).mgf_boundary(), 0.5);
        for d in [
            DistributionSpec::pareto(2.0, 1.0),
            DistributionSpec::weibull(0.5, 1.0),
            DistributionSpec::lognormal(0.0, 1.0),
        ] {
            assert_eq!(d.mgf_boundary(), 0.0);
            assert!(d.is_strongly_subexponential());
        }
    }

    #[test]
    fn mgf_is_one_at_zero() {
        for d in zoo() {
            assert_eq!(d.mgf(0.0), 1.0);
        }
    }

    #[test]
    fn mgf_slope_at_zero_is_the_mean() {
        let h = 1e-6;
        for d in zoo() {
            let m = d.mean();
            // heavy tails have no MGF to the right of zero: one-sided difference
            let slope = if d.mgf_boundary() > h {
                (d.mgf(h) - d.mgf(-h)) / (2.0 * h)
            } else {
                (d.mgf(0.0) - d.mgf(-h)) / h
            };
            assert!(
                (slope - m).abs() / m < 1e-4,
                "{d:?}: slope {slope} mean {m}"
            );
        }
    }

    #[test]
    fn numeric_mgf_matches_closed_form_for_weibull_one() {
        // Weibull(1, 2) is Exp(1/2); force the quadrature path through LogNormal-free check:
        // compare the integral representation against the closed form directly.
        let d = DistributionSpec::weibull(1.0, 2.0);
        let s = -0.7;
        let numeric = 1.0 + s * d.weighted_tail_integral(|x| (s * x).exp());
        assert_relative_eq!(numeric, d.mgf(s), epsilon = 1e-10);
    }

    #[test]
    fn integrated_tail_values() {
        let e = DistributionSpec::exponential(0.7);
        for u in [0.1, 1.0, 5.0] {
            assert_relative_eq!(
                e.integrated_tail(u).unwrap(),
                1.0 - (-0.7 * u).exp(),
                epsilon = 1e-14
            );
        }
        let p = DistributionSpec::pareto(2.0, 1.0);
        assert_relative_eq!(p.integrated_tail(1.0).unwrap(), 0.5, epsilon = 1e-15);
        for d in zoo() {
            assert_eq!(d.integrated_tail(0.0).unwrap(), 0.0);
        }
        assert!(e.integrated_tail(-1.0).is_err());
        assert!(DistributionSpec::deterministic(0.0)
            .integrated_tail(1.0)
            .is_err());
    }

    #[test]
    fn integrated_tail_closed_forms_match_quadrature() {
        for d in zoo() {
            let m = d.mean();
            for u in [0.3, 1.7, 6.0] {
                let q = quadrature::double_exponential::integrate(|y| d.survival(y), 0.0, u, 1e-12);
                let direct = q.integral / m;
                if matches!(d, Deterministic { .. }) {
                    continue;
                }
                assert_relative_eq!(d.integrated_tail(u).unwrap(), direct, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn integrated_tail_monotone_and_saturates() {
        for d in zoo() {
            let mut prev = 0.0;
            for i in 1..200 {
                let v = d.integrated_tail(i as f64 * 0.1).unwrap();
                assert!(v >= prev - 1e-15, "{d:?}");
                prev = v;
            }
            if !d.is_heavy_tailed() {
                let far = d.integrated_tail(1e3 * d.mean()).unwrap();
                assert!((1.0 - far).abs() < 1e-3, "{d:?}: {far}");
            }
        }
    }

    #[test]
    fn exponential_tilts() {
        let e = DistributionSpec::exponential(1.0);
        assert_eq!(e.exp_tilt(0.0).unwrap(), e);
        assert_eq!(e.exp_tilt(0.5).unwrap(), DistributionSpec::exponential(0.5));
        // the shock tilt of the measure change: s = -alpha(R) = (2 - sqrt 3) / 2
        let s = (2.0 - 3f64.sqrt()) / 2.0;
        let t = e.exp_tilt(s).unwrap();
        assert_relative_eq!(
            t.exponential_rate().unwrap(),
            3f64.sqrt() / 2.0,
            epsilon = 1e-15
        );
        let emp = empirical_mean(&t, 100_000, 3);
        assert!((emp.mean() - 2.0 / 3f64.sqrt()).abs() < 3.0 * emp.stderr());
        assert!(matches!(
            e.exp_tilt(1.0),
            Err(Error::OutsideMgfDomain { .. })
        ));
    }

    #[test]
    fn heavy_tails_tilt_only_downwards() {
        let p = DistributionSpec::pareto(2.0, 1.0);
        assert!(p.exp_tilt(0.1).is_err());
        let t = p.exp_tilt(-0.5).unwrap();
        assert!(matches!(t, Tilted { .. }));
        // mean of the tilted law: M'(-0.5) / M(-0.5)
        let emp = empirical_mean(&t, 100_000, 4);
        assert!(
            (emp.mean() - t.mean()).abs() < 3.0 * emp.stderr(),
            "{} vs {}",
            emp.mean(),
            t.mean()
        );
        // tilting back composes in the base
        assert_eq!(t.exp_tilt(0.5).unwrap(), p);
        assert_eq!(t.exp_tilt(0.3).unwrap(), p.exp_tilt(-0.2).unwrap());
        assert!(t.exp_tilt(0.6).is_err());
    }

    #[test]
    fn tilted_survival_is_a_proper_tail() {
        let t = DistributionSpec::lognormal(0.0, 1.0)
            .exp_tilt(-0.3)
            .unwrap();
        assert_relative_eq!(t.survival(0.0), 1.0, epsilon = 1e-9);
        assert!(t.survival(50.0) < 1e-6);
        let q = quadrature::double_exponential::integrate(|y| t.survival(y), 0.0, 60.0, 1e-10);
        assert_relative_eq!(q.integral, t.mean(), epsilon = 1e-6);
    }

    #[test]
    fn empirical_cdfs_match() {
        for (k, d) in zoo().into_iter().enumerate() {
            if matches!(d, Deterministic { .. }) {
                continue;
            }
            let mut rng = stream(100 + k as u64, 0);
            let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
            let ks = ks_statistic(&xs, |x| d.cdf(x));
            assert!(ks < 0.01, "{d:?}: KS {ks}");
        }
    }

    #[test]
    fn validation() {
        assert!(DistributionSpec::pareto(1.0, 1.0).validate().is_err());
        assert!(DistributionSpec::weibull(1.5, 1.0).validate().is_err());
        assert!(DistributionSpec::exponential(0.0).validate().is_err());
        assert!(DistributionSpec::deterministic(-1.0).validate().is_err());
        for d in zoo() {
            d.validate().unwrap();
        }
    }

    #[test]
    fn config_records() {
        let d: DistributionSpec =
            serde_json::from_str(r#"{"kind": "exponential", "rate": 1.0}"#).unwrap();
        assert_eq!(d, DistributionSpec::exponential(1.0));
        let d: DistributionSpec =
            serde_json::from_str(r#"{"kind": "lognormal", "location": 0.0, "scale": 1.0}"#)
                .unwrap();
        assert_eq!(d, DistributionSpec::lognormal(0.0, 1.0));
    }

    proptest! {
        #[test]
        fn in_family_tilts_invert(rate in 0.1f64..10.0, shape in 0.2f64..5.0, frac in -3.0f64..0.95) {
            for d in [DistributionSpec::exponential(rate), DistributionSpec::gamma(shape, rate)] {
                let s = frac * rate;
                let back = d.exp_tilt(s).unwrap().exp_tilt(-s).unwrap();
                match (&d, &back) {
                    (Exponential { rate: a }, Exponential { rate: b }) => prop_assert!((a - b).abs() <= 1e-12 * a),
                    (Gamma { shape: k1, rate: a }, Gamma { shape: k2, rate: b }) => {
                        prop_assert_eq!(k1, k2);
                        prop_assert!((a - b).abs() <= 1e-12 * a);
                    }
                    _ => prop_assert!(false, "left the family"),
                }
            }
        }

        #[test]
        fn tilted_mgf_ratio(rate in 0.2f64..5.0, s in -2.0f64..0.0, t in -1.0f64..0.0) {
            let d = DistributionSpec::gamma(1.7, rate);
            let tilted = d.exp_tilt(s).unwrap();
            let lhs = tilted.mgf(t);
            let rhs = d.mgf(s + t) / d.mgf(s);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }
}
