//! Exponential change of measure `Q^(r)` and the importance-sampling ruin
//! estimator built on it.
//!
//! Under `Q^(r)` the intensity keeps its baseline and decay, shocks follow
//! `F_Y` tilted by `-alpha(r)`, claims follow `F_U` tilted by `r`, and events
//! fire at `m lambda_t` with `m = M_U(r) M_Y(-alpha(r))`. At `r = R` the
//! surplus drifts down and ruin is certain, so every path contributes.

use serde::Serialize;

use crate::distributions::DistributionSpec;
use crate::error::{ensure, Error, Result};
use crate::hawkes::IntensityPath;
use crate::lundberg::LundbergSolution;
use crate::mc::MonteCarlo;
use crate::risk::{summarize, RiskModel, SurplusTracker};
use crate::stats::{EstimateCI, Summary};

/// Dynamics of `(X, lambda)` under `Q^(r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedModel {
    pub a: f64,
    pub beta: f64,
    /// Shock law `F_Y` tilted by `-alpha(r)`.
    pub shock: DistributionSpec,
    /// Claim law `F_U` tilted by `r`.
    pub claim: DistributionSpec,
    /// `M_U(r) M_Y(-alpha(r))`.
    pub jump_rate_multiplier: f64,
    pub c: f64,
    pub r: f64,
    pub alpha_r: f64,
    pub theta_r: f64,
    /// Rate of the scaled shocks `m Y~` when shocks and claims are exponential.
    pub gamma_r: Option<f64>,
}

impl TiltedModel {
    /// Baseline of the scaled intensity `m lambda_t`.
    pub fn baseline(&self) -> f64 {
        self.a * self.jump_rate_multiplier
    }

    /// Mean jump of the scaled intensity.
    pub fn scaled_shock_mean(&self) -> f64 {
        self.jump_rate_multiplier * self.shock.mean()
    }

    /// Long-run event rate under `Q^(r)`.
    pub fn stationary_event_rate(&self) -> f64 {
        self.beta * self.baseline() / (self.beta - self.scaled_shock_mean())
    }

    /// `lim E^Q[X_t] / t`; equals `-theta'(r)`.
    pub fn drift(&self) -> f64 {
        self.c - self.claim.mean() * self.stationary_event_rate()
    }

    /// Expected number of events on `[0, t]` under `Q^(r)` from `lambda0`.
    pub fn expected_count(&self, lambda0: f64, t: f64) -> f64 {
        let inf = self.stationary_event_rate();
        let k = self.beta - self.scaled_shock_mean();
        inf * t - (self.jump_rate_multiplier * lambda0 - inf) * (-k * t).exp_m1() / k
    }

    pub fn intensity_path(&self, lambda0: f64) -> IntensityPath<'_> {
        IntensityPath::with_dynamics(
            self.a,
            self.beta,
            &self.shock,
            self.jump_rate_multiplier,
            lambda0,
        )
    }
}

pub fn tilt_model(model: &RiskModel, sol: &LundbergSolution, r: f64) -> Result<TiltedModel> {
    ensure(r >= 0.0 && r <= sol.r_max, || {
        format!("tilt r = {r} outside [0, r_max = {}]", sol.r_max)
    })?;
    let alpha_r = if r == sol.adjustment {
        sol.alpha_at_adjustment
    } else {
        sol.alpha(r)?
    };
    let theta_r = -model.c * r - alpha_r * model.hawkes.beta * model.hawkes.a;
    let shock = model.hawkes.shock.exp_tilt(-alpha_r)?;
    let claim = model.claim.exp_tilt(r)?;
    let m = model.claim.mgf(r) * model.hawkes.shock.mgf(-alpha_r);
    let beta = model.hawkes.beta;
    let scaled_shock_mean = m * shock.mean();
    if beta <= scaled_shock_mean {
        return Err(Error::NotRecurrent {
            beta,
            scaled_shock_mean,
        });
    }
    let gamma_r = match (
        model.hawkes.shock.exponential_rate(),
        model.claim.exponential_rate(),
    ) {
        (Some(g), Some(mu)) => Some((g + alpha_r).powi(2) * (mu - r) / (g * mu)),
        _ => None,
    };
    Ok(TiltedModel {
        a: model.hawkes.a,
        beta,
        shock,
        claim,
        jump_rate_multiplier: m,
        c: model.c,
        r,
        alpha_r,
        theta_r,
        gamma_r,
    })
}

/// Monte Carlo mean of `M_t^(r) / M_0^(r)` under the original measure; one in
/// expectation for every admissible `r`.
pub fn martingale_unit_mean_check(
    model: &RiskModel,
    sol: &LundbergSolution,
    r: f64,
    t: f64,
    mc: &MonteCarlo,
) -> Result<EstimateCI> {
    ensure(mc.n >= 1, || "need at least one replication".into())?;
    ensure(r < sol.r_max || r == 0.0, || {
        format!("r = {r} must stay below r_max = {}", sol.r_max)
    })?;
    if r == 0.0 {
        // M is identically one
        let s: Summary = std::iter::repeat_n(1.0, mc.n).collect();
        return Ok(EstimateCI::from_summary(&s));
    }
    let alpha = sol.alpha(r)?;
    let theta = sol.theta(r)?;
    let s = summarize(mc, |rng| {
        let mut path = IntensityPath::new(&model.hawkes, model.lambda0);
        let mut book = SurplusTracker::new(model.u, model.c);
        while let Some(j) = path.next_event(rng, t)? {
            book.claim(j.time, model.claim.sample(rng));
        }
        let dx = book.surplus_at(t) - model.u;
        let dl = path.lambda_at(t) - model.lambda0;
        Ok((-r * dx - alpha * dl - theta * t).exp())
    })?;
    Ok(EstimateCI::from_summary(&s))
}

/// Importance-sampling estimate of the infinite-horizon ruin probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsEstimate {
    pub estimate: EstimateCI,
    /// Paths that reached the time cap without ruin (weight zero).
    pub capped_fraction: f64,
    /// Set when more than 1e-3 of the paths were capped.
    pub capped_flag: bool,
    /// Largest weight over the Lundberg bound `e^{-Ru - alpha(R)(lambda0 - a)}`.
    pub max_weight_ratio: f64,
    /// Paths whose weight exceeded the bound.
    pub bound_violations: usize,
    pub bound: f64,
    pub time_cap: f64,
}

/// Default horizon for importance-sampling paths: `1e3 u / |drift|`, at least `1e3`.
pub fn default_time_cap(u: f64, drift: f64) -> f64 {
    (1e3 * u / drift.abs()).max(1e3)
}

#[derive(Default)]
struct IsAcc {
    s: Summary,
    capped: usize,
    max_ratio: f64,
    violations: usize,
    err: Option<Error>,
}

pub fn is_ruin_estimate(
    model: &RiskModel,
    sol: &LundbergSolution,
    mc: &MonteCarlo,
    time_cap: Option<f64>,
) -> Result<IsEstimate> {
    ensure(mc.n >= 1, || "need at least one replication".into())?;
    let q = tilt_model(model, sol, sol.adjustment)?;
    let drift = q.drift();
    if drift >= 0.0 {
        return Err(Error::Numerical(format!(
            "tilted drift {drift} is not negative"
        )));
    }
    let cap = time_cap.unwrap_or_else(|| default_time_cap(model.u, drift));
    let (r, alpha) = (sol.adjustment, sol.alpha_at_adjustment);
    let (u, lambda0, a) = (model.u, model.lambda0, model.hawkes.a);
    let bound = (-r * u - alpha * (lambda0 - a)).exp();

    let acc = mc.fold(
        IsAcc::default,
        |acc, _, rng| {
            if acc.err.is_some() {
                return;
            }
            let mut path = q.intensity_path(lambda0);
            let mut book = SurplusTracker::new(u, model.c);
            loop {
                match path.next_event(rng, cap) {
                    Err(e) => {
                        acc.err = Some(e);
                        return;
                    }
                    Ok(None) => {
                        acc.capped += 1;
                        acc.s.push(0.0);
                        return;
                    }
                    Ok(Some(j)) => {
                        let x = book.claim(j.time, q.claim.sample(rng));
                        if x < 0.0 {
                            let lambda_tau = j.lambda_before + j.mark;
                            let w = (r * (x - u) + alpha * (lambda_tau - lambda0)).exp();
                            let ratio = w / bound;
                            if ratio > 1.0 + 1e-12 {
                                acc.violations += 1;
                            }
                            acc.max_ratio = acc.max_ratio.max(ratio);
                            acc.s.push(w);
                            return;
                        }
                    }
                }
            }
        },
        |acc, part| {
            acc.s.merge(part.s);
            acc.capped += part.capped;
            acc.max_ratio = acc.max_ratio.max(part.max_ratio);
            acc.violations += part.violations;
            if acc.err.is_none() {
                acc.err = part.err;
            }
        },
    );
    if let Some(e) = acc.err {
        return Err(e);
    }
    let capped_fraction = acc.capped as f64 / mc.n as f64;
    Ok(IsEstimate {
        estimate: EstimateCI::from_summary(&acc.s),
        capped_fraction,
        capped_flag: capped_fraction > 1e-3,
        max_weight_ratio: acc.max_ratio,
        bound_violations: acc.violations,
        bound,
        time_cap: cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes::HawkesParams;
    use crate::lundberg::adjustment_coefficient;
    use crate::risk::crude_ruin_mc;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn e1() -> RiskModel {
        let h = HawkesParams::new(1.0, 2.0, DistributionSpec::exponential(1.0)).unwrap();
        RiskModel::new(h, 3.0, DistributionSpec::exponential(1.0), 2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_tilt_is_identity() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let q = tilt_model(&m, &sol, 0.0).unwrap();
        assert_eq!(q.jump_rate_multiplier, 1.0);
        assert_eq!(q.baseline(), 1.0);
        assert_eq!(q.shock, m.hawkes.shock);
        assert_eq!(q.claim, m.claim);
        assert!((q.drift() - m.net_profit_margin()).abs() < 1e-12);
    }

    #[test]
    fn e1_tilted_parameters() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let q = tilt_model(&m, &sol, sol.adjustment).unwrap();
        assert!((q.baseline() - (3.0 - SQRT3)).abs() < 1e-9);
        assert!((q.shock.exponential_rate().unwrap() - SQRT3 / 2.0).abs() < 1e-9);
        assert!((q.claim.exponential_rate().unwrap() - (1.0 + SQRT3) / 3.0).abs() < 1e-9);
        assert!((q.gamma_r.unwrap() - (1.0 + SQRT3) / 4.0).abs() < 1e-9);
        assert!(q.theta_r.abs() < 1e-10);
    }

    #[test]
    fn e1_drift_matches_theta_slope() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let q = tilt_model(&m, &sol, sol.adjustment).unwrap();
        let d = q.drift();
        assert!((d + 2.196).abs() < 1e-3, "{d}");
        let (r, h) = (sol.adjustment, 1e-6);
        let slope = (sol.theta(r + h).unwrap() - sol.theta(r - h).unwrap()) / (2.0 * h);
        assert!((d + slope).abs() < 1e-2, "drift {d} theta' {slope}");
    }

    #[test]
    fn rejects_bad_tilts() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        assert!(tilt_model(&m, &sol, -0.1).is_err());
        assert!(tilt_model(&m, &sol, 0.2).is_err());
    }

    #[test]
    fn tilted_event_count_matches_closed_form() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let q = tilt_model(&m, &sol, sol.adjustment).unwrap();
        let t = 10.0;
        let s = summarize(&MonteCarlo::new(5, 20_000), |rng| {
            let mut p = q.intensity_path(1.0);
            while p.next_event(rng, t)?.is_some() {}
            Ok(p.events() as f64)
        })
        .unwrap();
        let want = q.expected_count(1.0, t);
        assert!(
            (s.mean() - want).abs() < 3.0 * s.stderr(),
            "{} vs {want}",
            s.mean()
        );
    }

    #[test]
    fn martingale_at_zero_is_exact() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let e = martingale_unit_mean_check(&m, &sol, 0.0, 5.0, &MonteCarlo::new(1, 100)).unwrap();
        assert_eq!((e.value, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn martingale_unit_mean() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let r = sol.adjustment;
        for (k, &(rr, t)) in [(r, 5.0), (r / 2.0, 2.0), (r / 2.0, 1.0)]
            .iter()
            .enumerate()
        {
            let e = martingale_unit_mean_check(
                &m,
                &sol,
                rr,
                t,
                &MonteCarlo::new(10 + k as u64, 100_000),
            )
            .unwrap();
            assert!(e.within_sigma(1.0, 3.0), "r={rr} t={t}: {e:?}");
        }
    }

    #[test]
    fn weights_respect_lundberg_bound() {
        let m = e1().with_lambda0(3.0);
        let sol = adjustment_coefficient(&m).unwrap();
        let est = is_ruin_estimate(&m, &sol, &MonteCarlo::new(3, 20_000), None).unwrap();
        assert_eq!(est.bound_violations, 0);
        assert!(est.max_weight_ratio <= 1.0);
        assert!(est.estimate.value <= est.bound);
        assert_eq!(est.capped_fraction, 0.0);
    }

    #[test]
    fn zero_capital() {
        let m = e1().with_u(0.0);
        let sol = adjustment_coefficient(&m).unwrap();
        let v = is_ruin_estimate(&m, &sol, &MonteCarlo::new(4, 10_000), None)
            .unwrap()
            .estimate
            .value;
        assert!(v > 0.0 && v < 1.0, "{v}");
    }

    #[test]
    fn agrees_with_crude_estimator() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let mc = MonteCarlo::new(6, 100_000);
        let is = is_ruin_estimate(&m, &sol, &mc, None).unwrap().estimate;
        let crude = crude_ruin_mc(&m, 200.0, &mc.reseeded(1)).unwrap();
        assert!(is.overlaps(&crude), "{is:?} {crude:?}");
    }

    #[test]
    fn relative_error_stays_small_far_out() {
        let m = e1().with_u(20.0);
        let sol = adjustment_coefficient(&m).unwrap();
        let e = is_ruin_estimate(&m, &sol, &MonteCarlo::new(8, 100_000), None).unwrap();
        assert!(e.estimate.relative_stderr() < 0.02, "{:?}", e.estimate);
    }

    #[test]
    fn compound_poisson_reduction() {
        let h = HawkesParams::new(1.0, 2.0, DistributionSpec::deterministic(0.0)).unwrap();
        let m = RiskModel::new(h, 2.0, DistributionSpec::exponential(1.0), 1.0, 1.0).unwrap();
        let sol = adjustment_coefficient(&m).unwrap();
        let e = is_ruin_estimate(&m, &sol, &MonteCarlo::new(9, 100_000), None)
            .unwrap()
            .estimate;
        assert!(e.within_sigma(0.5 * (-0.5f64).exp(), 3.0), "{e:?}");
    }

    #[test]
    fn executors_agree_bitwise() {
        let m = e1();
        let sol = adjustment_coefficient(&m).unwrap();
        let mc = MonteCarlo::new(12, 5000);
        let a = is_ruin_estimate(&m, &sol, &mc.sequential(), None).unwrap();
        let b = is_ruin_estimate(&m, &sol, &mc, None).unwrap();
        assert_eq!(a, b);
    }
}
