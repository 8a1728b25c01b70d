//! Ruin curves against their large-capital limits: `psi(u) e^{R u}` for
//! light-tailed claims, `psi(u) / (1 - F^s_U(u))` for strongly subexponential
//! ones.

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::lundberg::LundbergSolution;
use crate::mc::MonteCarlo;
use crate::measure_change::is_ruin_estimate;
use crate::risk::{crude_ruin_curve, RiskModel};
use crate::stats::EstimateCI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    Cramer,
    Heavy,
}

/// One grid point of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub u: f64,
    pub psi_hat: f64,
    pub stderr: f64,
    pub scaled: f64,
    pub scaled_stderr: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub mode: CurveMode,
    pub points: Vec<CurvePoint>,
    /// Plateau fit (Cramér) or `rho / (1 - rho)` (heavy tails).
    pub target: f64,
    pub target_stderr: f64,
    /// Smallest and largest scaled value over the grid.
    pub c_minus: f64,
    pub c_plus: f64,
    /// Largest fraction of importance-sampling paths stopped by the time cap.
    pub capped_fraction: f64,
    pub warning: Option<String>,
}

impl AsymptoticsReport {
    fn new(mode: CurveMode, points: Vec<CurvePoint>, target: f64, target_stderr: f64) -> Self {
        let c_minus = points
            .iter()
            .map(|p| p.scaled)
            .fold(f64::INFINITY, f64::min);
        let c_plus = points
            .iter()
            .map(|p| p.scaled)
            .fold(f64::NEG_INFINITY, f64::max);
        let points = points
            .into_iter()
            .map(|p| CurvePoint { target, ..p })
            .collect();
        Self {
            mode,
            points,
            target,
            target_stderr,
            c_minus,
            c_plus,
            capped_fraction: 0.0,
            warning: None,
        }
    }

    /// Every pair of scaled values within `k` combined standard errors.
    pub fn is_flat(&self, k: f64) -> bool {
        self.points.iter().enumerate().all(|(i, p)| {
            self.points[i + 1..]
                .iter()
                .all(|q| (p.scaled - q.scaled).abs() <= k * p.scaled_stderr.hypot(q.scaled_stderr))
        })
    }

    /// `psi_hat` never increases by more than `k` combined standard errors.
    pub fn is_decreasing(&self, k: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].psi_hat - w[0].psi_hat <= k * w[0].stderr.hypot(w[1].stderr))
    }
}

fn check_grid(u_grid: &[f64]) -> Result<()> {
    ensure(!u_grid.is_empty(), || "empty capital grid".into())?;
    ensure(u_grid.iter().all(|u| u.is_finite() && *u >= 0.0), || {
        "capital grid must be finite and >= 0".into()
    })?;
    ensure(u_grid.windows(2).all(|w| w[0] < w[1]), || {
        "capital grid must be strictly increasing".into()
    })
}

/// Inverse-variance weighted mean over the upper half of the grid.
fn plateau(points: &[CurvePoint]) -> (f64, f64) {
    let top = &points[points.len() / 2..];
    let floor = f64::MIN_POSITIVE;
    let (sw, swx) = top.iter().fold((0.0, 0.0), |(sw, swx), p| {
        let w = 1.0 / p.scaled_stderr.powi(2).max(floor);
        (sw + w, swx + w * p.scaled)
    });
    (swx / sw, (1.0 / sw).sqrt())
}

/// `psi_hat(u) e^{R u}` over `u_grid` from importance sampling, one
/// independent stream family per grid point.
pub fn cramer_curve(
    model: &RiskModel,
    sol: &LundbergSolution,
    u_grid: &[f64],
    mc: &MonteCarlo,
    time_cap: Option<f64>,
) -> Result<AsymptoticsReport> {
    check_grid(u_grid)?;
    let r = sol.adjustment;
    let mut capped: f64 = 0.0;
    let mut points = Vec::with_capacity(u_grid.len());
    for (i, &u) in u_grid.iter().enumerate() {
        let est = is_ruin_estimate(&model.with_u(u), sol, &mc.reseeded(i as u64), time_cap)?;
        capped = capped.max(est.capped_fraction);
        let e = est.estimate;
        let f = (r * u).exp();
        points.push(CurvePoint {
            u,
            psi_hat: e.value,
            stderr: e.stderr,
            scaled: e.value * f,
            scaled_stderr: e.stderr * f,
            target: f64::NAN,
        });
    }
    let (target, target_stderr) = plateau(&points);
    let mut rep = AsymptoticsReport::new(CurveMode::Cramer, points, target, target_stderr);
    rep.capped_fraction = capped;
    let exp_exp =
        model.claim.exponential_rate().is_some() && model.hawkes.shock.exponential_rate().is_some();
    if !exp_exp {
        rep.warning = Some(
            "exponential recurrence of the intensity is only established for exponential shocks and claims; \
             the limit is not guaranteed here"
                .into(),
        );
    }
    Ok(rep)
}

/// `(rho / (1 - rho)) (1 - F^s_U(u))` with `rho = a E[U] / ((1 - mu) c)`.
pub fn heavy_tail_asymptote(model: &RiskModel, u: f64) -> Result<f64> {
    Ok(heavy_tail_prefactor(model)? * (1.0 - model.claim.integrated_tail(u)?))
}

/// `rho / (1 - rho)`.
pub fn heavy_tail_prefactor(model: &RiskModel) -> Result<f64> {
    if !model.claim.is_strongly_subexponential() {
        return Err(Error::LightTailed);
    }
    let rho = model.clustered_load()?;
    if rho >= 1.0 {
        return Err(Error::ClusteredNetProfit {
            premium: model.c,
            outflow: rho * model.c,
        });
    }
    Ok(rho / (1.0 - rho))
}

/// Crude `psi_hat(u) / (1 - F^s_U(u))` over `u_grid` from one set of paths.
pub fn heavy_tail_curve(
    model: &RiskModel,
    u_grid: &[f64],
    horizon: f64,
    mc: &MonteCarlo,
) -> Result<AsymptoticsReport> {
    check_grid(u_grid)?;
    let prefactor = heavy_tail_prefactor(model)?;
    let est: Vec<EstimateCI> = crude_ruin_curve(model, u_grid, horizon, mc)?;
    let points = est
        .iter()
        .zip(u_grid)
        .map(|(e, &u)| {
            let tail = 1.0 - model.claim.integrated_tail(u)?;
            Ok(CurvePoint {
                u,
                psi_hat: e.value,
                stderr: e.stderr,
                scaled: e.value / tail,
                scaled_stderr: e.stderr / tail,
                target: prefactor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticsReport::new(
        CurveMode::Heavy,
        points,
        prefactor,
        0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::hawkes::HawkesParams;
    use crate::lundberg::adjustment_coefficient;

    fn model(shock: DistributionSpec, claim: DistributionSpec, c: f64) -> RiskModel {
        let h = HawkesParams::new(1.0, 2.0, shock).unwrap();
        RiskModel::new(h, c, claim, 1.0, 1.0).unwrap()
    }

    fn pareto_e1() -> RiskModel {
        model(
            DistributionSpec::exponential(1.0),
            DistributionSpec::pareto(2.0, 1.0),
            3.0,
        )
    }

    #[test]
    fn asymptote_values() {
        let m = pareto_e1();
        assert!((heavy_tail_prefactor(&m).unwrap() - 2.0).abs() < 1e-12);
        assert!((heavy_tail_asymptote(&m, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            heavy_tail_asymptote(&m, 0.0).unwrap(),
            heavy_tail_prefactor(&m).unwrap()
        );
    }

    #[test]
    fn asymptote_rejects_light_tails_and_overload() {
        let e = model(
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
            3.0,
        );
        assert!(matches!(
            heavy_tail_asymptote(&e, 1.0),
            Err(Error::LightTailed)
        ));
        // rho = 2 / 2.1 < 1 is fine, c at the clustered boundary is not
        let near = pareto_e1().with_premium(2.1);
        assert!(heavy_tail_prefactor(&near).unwrap() > 10.0);
        assert!(heavy_tail_prefactor(&pareto_e1().with_premium(2.0)).is_err());
    }

    #[test]
    fn grid_must_increase() {
        let m = pareto_e1();
        let mc = MonteCarlo::new(1, 10);
        assert!(heavy_tail_curve(&m, &[2.0, 1.0], 10.0, &mc).is_err());
        assert!(heavy_tail_curve(&m, &[], 10.0, &mc).is_err());
    }

    #[test]
    fn cramer_curve_converges_and_is_bounded() {
        let m = model(
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
            3.0,
        );
        let sol = adjustment_coefficient(&m).unwrap();
        let rep = cramer_curve(
            &m,
            &sol,
            &[5.0, 10.0, 20.0, 40.0],
            &MonteCarlo::new(2, 20_000),
            None,
        )
        .unwrap();
        // the correction from the branch point at r_max decays like
        // u^{-1/2} e^{-(r_max - R) u}: decreasing, with shrinking steps
        let z: Vec<f64> = rep.points.iter().map(|p| p.scaled).collect();
        assert!(z.windows(2).all(|w| w[0] > w[1]), "{z:?}");
        assert!(z[2] - z[3] < z[0] - z[1], "{z:?}");
        assert!(rep.is_decreasing(3.0));
        assert!(rep.target > 0.0 && rep.target <= 1.0);
        assert!(rep.c_plus / rep.c_minus < 10.0);
        // lambda0 = a: the per-path bound is e^{-R u}
        assert!(rep.points.iter().all(|p| p.scaled <= 1.0));
        assert!(rep.warning.is_none());
    }

    #[test]
    fn non_exponential_curves_carry_a_warning() {
        let m = model(
            DistributionSpec::gamma(2.0, 2.0),
            DistributionSpec::exponential(1.0),
            3.0,
        );
        let sol = adjustment_coefficient(&m).unwrap();
        let rep = cramer_curve(&m, &sol, &[1.0, 2.0], &MonteCarlo::new(3, 2000), None).unwrap();
        assert!(rep.warning.is_some());
    }

    #[test]
    fn heavy_curve_is_finite_and_positive() {
        let rep = heavy_tail_curve(
            &pareto_e1(),
            &[1.0, 5.0, 10.0],
            200.0,
            &MonteCarlo::new(4, 20_000),
        )
        .unwrap();
        assert!(rep
            .points
            .iter()
            .all(|p| p.scaled.is_finite() && p.scaled > 0.0));
        assert!(rep.is_decreasing(3.0));
    }

    #[test]
    fn compound_poisson_heavy_ratio() {
        // no clustering: rho = a E[U] / c = 0.5, classical prefactor 1
        let m = model(
            DistributionSpec::deterministic(0.0),
            DistributionSpec::pareto(2.0, 1.0),
            2.0,
        );
        assert!((heavy_tail_prefactor(&m).unwrap() - 1.0).abs() < 1e-12);
        let rep =
            heavy_tail_curve(&m, &[20.0, 50.0], 2000.0, &MonteCarlo::new(5, 100_000)).unwrap();
        let last = rep.points.last().unwrap();
        assert!((last.scaled / last.target - 1.0).abs() < 0.3, "{last:?}");
    }
}
