//! Stationary law of the intensity under exponential shocks, and
//! recurrence diagnostics for the intensity process.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma};

use crate::distributions::DistributionSpec;
use crate::error::{ensure, Error, Result};
use crate::hawkes::{HawkesParams, IntensityPath};
use crate::stats::{ks_statistic, EstimateCI, Summary};

/// Burn-in before sampling a long path. At this and [`DEFAULT_THIN`] the E1
/// intensity autocorrelation between samples is about `e^{-5}`.
pub const DEFAULT_BURN_IN: f64 = 200.0;
pub const DEFAULT_THIN: f64 = 5.0;

/// `shift + Gamma(shape, rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarySpec {
    pub shift: f64,
    pub shape: f64,
    pub rate: f64,
}

impl StationarySpec {
    pub fn mean(&self) -> f64 {
        self.shift + self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    fn gamma(&self) -> Gamma {
        Gamma::new(self.shape, self.rate).expect("validated on construction")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.shift {
            0.0
        } else {
            self.gamma().cdf(x - self.shift)
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= self.shift {
            0.0
        } else {
            self.gamma().pdf(x - self.shift)
        }
    }

    /// Rate of continuous downcrossings of `level` in stationarity,
    /// `beta (level - a) p(level)`.
    pub fn downcrossing_rate(&self, beta: f64, level: f64) -> f64 {
        beta * (level - self.shift) * self.density(level)
    }
}

/// Stationary intensity law for `Exp(gamma)` shocks:
/// `a + Gamma(a / beta, (beta gamma - 1) / beta)`.
pub fn stationary_exp_shocks(a: f64, beta: f64, gamma: f64) -> Result<StationarySpec> {
    ensure(a > 0.0 && beta > 0.0 && gamma > 0.0, || {
        format!("a = {a}, beta = {beta}, gamma = {gamma} must all be > 0")
    })?;
    let product = beta * gamma;
    if product <= 1.0 {
        return Err(Error::ShockRateTooSmall { product });
    }
    Ok(StationarySpec {
        shift: a,
        shape: a / beta,
        rate: (product - 1.0) / beta,
    })
}

pub fn stationary_spec(params: &HawkesParams) -> Result<StationarySpec> {
    let gamma = params.shock.exponential_rate().ok_or_else(|| {
        Error::InvalidParameter("closed-form stationary law needs exponential shocks".into())
    })?;
    stationary_exp_shocks(params.a, params.beta, gamma)
}

fn no_shocks(params: &HawkesParams) -> bool {
    params.shock == DistributionSpec::deterministic(0.0)
}

/// `lambda` at `burn_in + k thin`, `k < n`, along one path from `lambda0`.
pub fn sample_intensity<R: Rng + ?Sized>(
    params: &HawkesParams,
    lambda0: f64,
    burn_in: f64,
    n: usize,
    thin: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure(lambda0 >= params.a, || {
        format!(
            "initial intensity {lambda0} must be >= baseline {}",
            params.a
        )
    })?;
    ensure(burn_in >= 0.0 && thin > 0.0, || {
        "need burn_in >= 0 and thin > 0".into()
    })?;
    let mut path = IntensityPath::new(params, lambda0);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let target = burn_in + k as f64 * thin;
        while path.next_event(rng, target)?.is_some() {}
        path.advance_to(target);
        out.push(path.lambda_at(target));
    }
    Ok(out)
}

/// Long-run intensity samples against the stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryCheck {
    pub ks: f64,
    pub mean: f64,
    pub var: f64,
    pub target_mean: f64,
    pub target_var: f64,
    pub n: usize,
}

/// KS distance of thinned long-run samples to the shifted Gamma law, or to
/// the point mass at `a` when shocks vanish.
pub fn ks_stationary_check<R: Rng + ?Sized>(
    params: &HawkesParams,
    lambda0: f64,
    burn_in: f64,
    n: usize,
    thin: f64,
    rng: &mut R,
) -> Result<StationaryCheck> {
    ensure(n >= 1, || "need at least one sample".into())?;
    let xs = sample_intensity(params, lambda0, burn_in, n, thin, rng)?;
    let s: Summary = xs.iter().copied().collect();
    let (ks, target_mean, target_var) = if no_shocks(params) {
        let a = params.a;
        let n = xs.len() as f64;
        let below = xs.iter().filter(|&&x| x < a).count() as f64 / n;
        let above = xs.iter().filter(|&&x| x > a).count() as f64 / n;
        (below.max(above), a, 0.0)
    } else {
        let spec = stationary_spec(params)?;
        (
            ks_statistic(&xs, |x| spec.cdf(x)),
            spec.mean(),
            spec.variance(),
        )
    };
    Ok(StationaryCheck {
        ks,
        mean: s.mean(),
        var: s.variance(),
        target_mean,
        target_var,
        n,
    })
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let s: Summary = xs.iter().copied().collect();
    let m = s.mean();
    let den: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let num: f64 = xs.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    num / den
}

/// A continuous downcrossing of a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    /// Intensity evaluated at the crossing time.
    pub lambda: f64,
}

/// Time to reach `level` from above after leaving it, between jumps the
/// decay `a + (lambda - a) e^{-beta s}` is solved for the crossing exactly.
fn first_return<R: Rng + ?Sized>(
    params: &HawkesParams,
    level: f64,
    rng: &mut R,
) -> Result<Crossing> {
    let mut path = IntensityPath::new(params, level);
    // intensity right after the last jump, and that jump's time
    let (mut t_last, mut lam) = (0.0, level);
    loop {
        let j = if lam > level {
            let hit = t_last + ((lam - params.a) / (level - params.a)).ln() / params.beta;
            match path.next_event(rng, hit)? {
                Some(j) => j,
                None => {
                    path.advance_to(hit);
                    return Ok(Crossing {
                        time: hit,
                        lambda: path.lambda_at(hit),
                    });
                }
            }
        } else {
            path.next_event(rng, f64::INFINITY)?
                .ok_or_else(|| Error::Numerical("intensity stopped firing".into()))?
        };
        t_last = j.time;
        lam = j.lambda_before + j.mark;
    }
}

fn check_recurrence_inputs(params: &HawkesParams, level: f64) -> Result<()> {
    ensure(level > params.a, || {
        format!("level {level} must exceed baseline {}", params.a)
    })?;
    ensure(params.shock.mean() > 0.0, || {
        "degenerate shocks: the intensity never rises back above the level".into()
    })
}

/// `n` i.i.d. return times `S_1` to `level`, each started at `lambda = level`.
pub fn sample_recurrence_times<R: Rng + ?Sized>(
    params: &HawkesParams,
    level: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(sample_recurrence_crossings(params, level, n, rng)?
        .into_iter()
        .map(|c| c.time)
        .collect())
}

pub fn sample_recurrence_crossings<R: Rng + ?Sized>(
    params: &HawkesParams,
    level: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Crossing>> {
    check_recurrence_inputs(params, level)?;
    (0..n).map(|_| first_return(params, level, rng)).collect()
}

/// Downcrossings of `level` per unit time along one path after `burn_in`,
/// with a batch-means standard error over `batches` windows of length `window`.
pub fn downcrossing_rate<R: Rng + ?Sized>(
    params: &HawkesParams,
    lambda0: f64,
    level: f64,
    burn_in: f64,
    window: f64,
    batches: usize,
    rng: &mut R,
) -> Result<EstimateCI> {
    check_recurrence_inputs(params, level)?;
    ensure(batches >= 2 && window > 0.0, || {
        "need >= 2 batches of positive length".into()
    })?;
    let (a, beta) = (params.a, params.beta);
    let total = burn_in + batches as f64 * window;
    let mut bins = vec![0usize; batches];
    let mut path = IntensityPath::new(params, lambda0);
    // intensity right after the last jump, and that jump's time
    let (mut t_last, mut lam) = (0.0, lambda0);
    loop {
        let j = path.next_event(rng, total)?;
        let next = j.map_or(total, |j| j.time);
        if lam > level {
            let hit = t_last + ((lam - a) / (level - a)).ln() / beta;
            if hit < next && hit >= burn_in {
                bins[(((hit - burn_in) / window) as usize).min(batches - 1)] += 1;
            }
        }
        match j {
            Some(j) => {
                t_last = j.time;
                lam = j.lambda_before + j.mark;
            }
            None => break,
        }
    }
    let s: Summary = bins.iter().map(|&k| k as f64 / window).collect();
    Ok(EstimateCI::from_summary(&s))
}

/// Empirical `E[e^{q S}]` over recurrence-time samples. A heuristic stand-in
/// for an exponential moment condition, not a proof of one.
pub fn empirical_mgf(samples: &[f64], q: f64) -> EstimateCI {
    let s: Summary = samples.iter().map(|&x| (q * x).exp()).collect();
    EstimateCI::from_summary(&s)
}

/// Empirical MGF of `S_1` at `q` over the first half and the full sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfDiagnostic {
    pub q: f64,
    pub half: EstimateCI,
    pub full: EstimateCI,
    /// Both finite and within 3 combined standard errors.
    pub stable: bool,
    pub heuristic: bool,
}

pub fn recurrence_mgf_diagnostic(samples: &[f64], q: f64) -> MgfDiagnostic {
    let half = empirical_mgf(&samples[..samples.len() / 2], q);
    let full = empirical_mgf(samples, q);
    let stable = half.value.is_finite() && full.value.is_finite() && half.agrees_with(&full, 3.0);
    MgfDiagnostic {
        q,
        half,
        full,
        stable,
        heuristic: true,
    }
}
