//! Surplus process `X_t = u + c t - sum U_i` driven by Hawkes arrivals, crude
//! ruin estimation, and the clustered Cramér-Lundberg comparison process.
//!
//! Ruin means `X_t < 0`. The surplus only moves up between claims, so the
//! first passage below zero always happens at a claim instant and checking
//! at jumps is exact.

use rand::Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{ensure, Error, Result};
use crate::hawkes::{sample_base_clusters, sample_cluster, Cluster, HawkesParams, IntensityPath};
use crate::mc::{MonteCarlo, StreamRng};
use crate::stats::{EstimateCI, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub hawkes: HawkesParams,
    /// Premium rate.
    pub c: f64,
    pub claim: DistributionSpec,
    /// Initial capital.
    pub u: f64,
    /// Initial intensity, at least the baseline.
    pub lambda0: f64,
}

impl RiskModel {
    pub fn new(
        hawkes: HawkesParams,
        c: f64,
        claim: DistributionSpec,
        u: f64,
        lambda0: f64,
    ) -> Result<Self> {
        let m = Self {
            hawkes,
            c,
            claim,
            u,
            lambda0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.hawkes.validate()?;
        self.claim.validate()?;
        ensure(self.c.is_finite() && self.c > 0.0, || {
            format!("premium rate c = {} must be > 0", self.c)
        })?;
        ensure(self.u.is_finite() && self.u >= 0.0, || {
            format!("initial capital u = {} must be >= 0", self.u)
        })?;
        ensure(
            self.lambda0.is_finite() && self.lambda0 >= self.hawkes.a,
            || {
                format!(
                    "initial intensity {} must be >= baseline {}",
                    self.lambda0, self.hawkes.a
                )
            },
        )?;
        if self.net_profit_margin() <= 0.0 {
            return Err(Error::NetProfit {
                premium: self.c,
                outflow: self.expected_claim_outflow(),
            });
        }
        Ok(())
    }

    pub fn with_u(&self, u: f64) -> Self {
        Self { u, ..self.clone() }
    }

    pub fn with_lambda0(&self, lambda0: f64) -> Self {
        Self {
            lambda0,
            ..self.clone()
        }
    }

    pub fn with_premium(&self, c: f64) -> Self {
        Self { c, ..self.clone() }
    }

    /// Long-run claim outflow per unit time, `a beta E[U] / (beta - E[Y])`.
    pub fn expected_claim_outflow(&self) -> f64 {
        self.hawkes.stationary_mean_intensity() * self.claim.mean()
    }

    /// `lim E[X_t] / t`; positive iff the net profit condition holds.
    pub fn net_profit_margin(&self) -> f64 {
        self.c - self.expected_claim_outflow()
    }

    /// `E[U~] = E[U] / (1 - mu)`, the mean total claim of one cluster.
    pub fn clustered_claim_mean(&self) -> Result<f64> {
        Ok(self.claim.mean() / (1.0 - self.hawkes.branching_ratio()?))
    }

    /// `rho = a E[U~] / c`.
    pub fn clustered_load(&self) -> Result<f64> {
        Ok(self.hawkes.a * self.clustered_claim_mean()? / self.c)
    }
}

/// How a single surplus path ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuinOutcome {
    pub ruined: bool,
    /// Ruin time; infinite when not ruined.
    pub tau: f64,
    /// `-X_tau > 0` when ruined, zero otherwise.
    pub deficit: f64,
    /// Intensity right after the ruinous claim, or at the horizon.
    pub lambda_at_tau: f64,
    pub events_used: usize,
    /// Surplus at `min(tau, horizon)`.
    pub surplus_end: f64,
}

/// Surplus bookkeeping between claims.
#[derive(Debug, Clone, Copy)]
pub struct SurplusTracker {
    u: f64,
    c: f64,
    paid: f64,
}

impl SurplusTracker {
    pub fn new(u: f64, c: f64) -> Self {
        Self { u, c, paid: 0.0 }
    }

    pub fn surplus_at(&self, t: f64) -> f64 {
        self.u + self.c * t - self.paid
    }

    /// Book a claim at time `t`; returns the surplus right after it.
    pub fn claim(&mut self, t: f64, amount: f64) -> f64 {
        self.paid += amount;
        self.surplus_at(t)
    }
}

/// One surplus path up to ruin or `horizon`.
pub fn simulate_surplus<R: Rng + ?Sized>(
    model: &RiskModel,
    horizon: f64,
    rng: &mut R,
) -> Result<RuinOutcome> {
    let mut path = IntensityPath::new(&model.hawkes, model.lambda0);
    let mut book = SurplusTracker::new(model.u, model.c);
    while let Some(j) = path.next_event(rng, horizon)? {
        let x = book.claim(j.time, model.claim.sample(rng));
        if x < 0.0 {
            return Ok(RuinOutcome {
                ruined: true,
                tau: j.time,
                deficit: -x,
                lambda_at_tau: j.lambda_before + j.mark,
                events_used: path.events(),
                surplus_end: x,
            });
        }
    }
    Ok(RuinOutcome {
        ruined: false,
        tau: f64::INFINITY,
        deficit: 0.0,
        lambda_at_tau: path.lambda_at(horizon),
        events_used: path.events(),
        surplus_end: book.surplus_at(horizon),
    })
}

/// Reduce replications of `f` to a summary, keeping the first error.
pub(crate) fn summarize<F>(mc: &MonteCarlo, f: F) -> Result<Summary>
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    let (s, err) = mc.fold(
        || (Summary::new(), None::<Error>),
        |acc, _, rng| {
            if acc.1.is_none() {
                match f(rng) {
                    Ok(x) => acc.0.push(x),
                    Err(e) => acc.1 = Some(e),
                }
            }
        },
        |acc, part| {
            acc.0.merge(part.0);
            if acc.1.is_none() {
                acc.1 = part.1;
            }
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(s),
    }
}

/// Per-path outcomes, for export.
pub fn ruin_outcomes(model: &RiskModel, horizon: f64, mc: &MonteCarlo) -> Result<Vec<RuinOutcome>> {
    mc.map(|_, rng| simulate_surplus(model, horizon, rng))
        .into_iter()
        .collect()
}

/// Fraction of paths ruined by `horizon`. A lower bound for the infinite-horizon
/// ruin probability that increases to it as the horizon grows.
pub fn crude_ruin_mc(model: &RiskModel, horizon: f64, mc: &MonteCarlo) -> Result<EstimateCI> {
    ensure(mc.n >= 1, || "need at least one replication".into())?;
    let s = summarize(mc, |rng| {
        Ok(if simulate_surplus(model, horizon, rng)?.ruined {
            1.0
        } else {
            0.0
        })
    })?;
    Ok(EstimateCI::from_summary(&s))
}

/// Largest `sum U_i - c t` over claim instants up to `horizon` (starting
/// capital ignored), or the first value above `stop_above`.
pub fn max_loss<R: Rng + ?Sized>(
    model: &RiskModel,
    horizon: f64,
    stop_above: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut path = IntensityPath::new(&model.hawkes, model.lambda0);
    let mut book = SurplusTracker::new(0.0, model.c);
    let mut worst = f64::NEG_INFINITY;
    while let Some(j) = path.next_event(rng, horizon)? {
        worst = worst.max(-book.claim(j.time, model.claim.sample(rng)));
        if worst > stop_above {
            break;
        }
    }
    Ok(worst)
}

/// Crude finite-horizon ruin estimates for every capital in `u_grid` from one
/// set of paths: ruin with capital `u` happens iff the maximal loss exceeds `u`.
pub fn crude_ruin_curve(
    model: &RiskModel,
    u_grid: &[f64],
    horizon: f64,
    mc: &MonteCarlo,
) -> Result<Vec<EstimateCI>> {
    ensure(mc.n >= 1 && !u_grid.is_empty(), || {
        "need replications and a non-empty grid".into()
    })?;
    let top = u_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = u_grid.len();
    let (sums, err) = mc.fold(
        || (vec![Summary::new(); k], None::<Error>),
        |acc, _, rng| {
            if acc.1.is_some() {
                return;
            }
            match max_loss(model, horizon, top, rng) {
                Ok(d) => acc
                    .0
                    .iter_mut()
                    .zip(u_grid)
                    .for_each(|(s, &u)| s.push(if d > u { 1.0 } else { 0.0 })),
                Err(e) => acc.1 = Some(e),
            }
        },
        |acc, part| {
            acc.0.iter_mut().zip(part.0).for_each(|(s, p)| s.merge(p));
            if acc.1.is_none() {
                acc.1 = part.1;
            }
        },
    );
    match err {
        Some(e) => Err(e),
        None => Ok(sums.iter().map(EstimateCI::from_summary).collect()),
    }
}

/// Total claim of one cluster, `U~ = U_0 + ... + U_kappa`.
pub fn sample_clustered_claim<R: Rng + ?Sized>(
    params: &HawkesParams,
    claim: &DistributionSpec,
    rng: &mut R,
) -> Result<f64> {
    let c = sample_cluster(params, rng)?;
    Ok((0..c.claim_count()).map(|_| claim.sample(rng)).sum())
}

fn check_clustered_net_profit(model: &RiskModel) -> Result<()> {
    let outflow = model.hawkes.a * model.clustered_claim_mean()?;
    if model.c <= outflow {
        return Err(Error::ClusteredNetProfit {
            premium: model.c,
            outflow,
        });
    }
    Ok(())
}

/// Crude ruin estimate for the compound Poisson process
/// `X~_t = u + c t - sum U~_i` with `Poisson(a)` cluster arrivals.
pub fn clustered_ruin_mc(model: &RiskModel, horizon: f64, mc: &MonteCarlo) -> Result<EstimateCI> {
    ensure(mc.n >= 1, || "need at least one replication".into())?;
    check_clustered_net_profit(model)?;
    let gap = Exp::new(model.hawkes.a).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let s = summarize(mc, |rng| {
        let mut book = SurplusTracker::new(model.u, model.c);
        let mut t = 0.0;
        loop {
            t += gap.sample(rng);
            if t > horizon {
                return Ok(0.0);
            }
            let claim = sample_clustered_claim(&model.hawkes, &model.claim, rng)?;
            if book.claim(t, claim) < 0.0 {
                return Ok(1.0);
            }
        }
    })?;
    Ok(EstimateCI::from_summary(&s))
}

/// Original and clustered surplus built from the same base events, clusters
/// and claims (`lambda0 = a`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    /// `min_t (X_t - X~_t)` over all claim instants of either process.
    pub min_gap: f64,
    pub ruined: bool,
    pub clustered_ruined: bool,
}

pub fn simulate_coupled<R: Rng + ?Sized>(
    model: &RiskModel,
    horizon: f64,
    rng: &mut R,
) -> Result<CoupledPath> {
    let clusters: Vec<(f64, Cluster)> = sample_base_clusters(&model.hawkes, horizon, rng)?;
    // (time, claim to X, claim to X~)
    let mut moves: Vec<(f64, f64, f64)> = Vec::new();
    for (t0, c) in &clusters {
        let claims: Vec<f64> = (0..c.claim_count())
            .map(|_| model.claim.sample(rng))
            .collect();
        moves.push((*t0, 0.0, claims.iter().sum()));
        moves.push((*t0, claims[0], 0.0));
        for (off, &u) in c.offsets.iter().zip(&claims[1..]) {
            if t0 + off <= horizon {
                moves.push((t0 + off, u, 0.0));
            }
        }
    }
    moves.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut original = SurplusTracker::new(model.u, model.c);
    let mut clustered = SurplusTracker::new(model.u, model.c);
    let mut out = CoupledPath {
        min_gap: f64::INFINITY,
        ruined: false,
        clustered_ruined: false,
    };
    let mut i = 0;
    while i < moves.len() {
        let t = moves[i].0;
        while i < moves.len() && moves[i].0 == t {
            original.claim(t, moves[i].1);
            clustered.claim(t, moves[i].2);
            i += 1;
        }
        let (x, xc) = (original.surplus_at(t), clustered.surplus_at(t));
        out.min_gap = out.min_gap.min(x - xc);
        out.ruined |= x < 0.0;
        out.clustered_ruined |= xc < 0.0;
    }
    Ok(out)
}

/// Empirical `q`-quantile of the cluster length `L`.
pub fn cluster_length_quantile(params: &HawkesParams, q: f64, mc: &MonteCarlo) -> Result<f64> {
    ensure((0.0..=1.0).contains(&q) && mc.n >= 1, || {
        format!("bad quantile request q = {q}, n = {}", mc.n)
    })?;
    let mut lengths: Vec<f64> = mc
        .map(|_, rng| sample_cluster(params, rng).map(|c| c.length()))
        .into_iter()
        .collect::<Result<_>>()?;
    lengths.sort_by(f64::total_cmp);
    let idx = ((q * lengths.len() as f64).ceil() as usize).clamp(1, lengths.len()) - 1;
    Ok(lengths[idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use approx::assert_relative_eq;

    fn e1(u: f64) -> RiskModel {
        let h = HawkesParams::new(1.0, 2.0, DistributionSpec::exponential(1.0)).unwrap();
        RiskModel::new(h, 3.0, DistributionSpec::exponential(1.0), u, 1.0).unwrap()
    }

    #[test]
    fn net_profit_margins() {
        assert_relative_eq!(e1(0.0).net_profit_margin(), 1.0, epsilon = 1e-15);
        let mut m = e1(0.0);
        m.claim = DistributionSpec::deterministic(0.0);
        assert_eq!(m.net_profit_margin(), 3.0);
        let boundary = e1(0.0).with_premium(2.0);
        assert_eq!(boundary.net_profit_margin(), 0.0);
        assert!(matches!(boundary.validate(), Err(Error::NetProfit { .. })));
    }

    #[test]
    fn scripted_first_claim_ruins() {
        // u = 0, first claim 1.0 at T1 = 0.2 with c = 3: 0.6 - 1.0 < 0
        let mut book = SurplusTracker::new(0.0, 3.0);
        let x = book.claim(0.2, 1.0);
        assert_relative_eq!(x, -0.4, epsilon = 1e-15);
        let mut book = SurplusTracker::new(0.0, 3.0);
        assert!(book.claim(0.5, 1.0) > 0.0);
    }

    #[test]
    fn no_claims_no_ruin() {
        let mut m = e1(0.0);
        m.claim = DistributionSpec::deterministic(0.0);
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            let o = simulate_surplus(&m, 50.0, &mut rng).unwrap();
            assert!(!o.ruined);
            assert!(o.tau.is_infinite());
            assert_relative_eq!(o.surplus_end, 150.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn outcome_invariants() {
        let m = e1(1.0);
        let mut rng = stream(2, 0);
        for _ in 0..2000 {
            let o = simulate_surplus(&m, 20.0, &mut rng).unwrap();
            assert_eq!(o.ruined, o.tau <= 20.0);
            assert_eq!(o.ruined, o.deficit > 0.0);
            assert!(o.lambda_at_tau >= m.hawkes.a);
        }
    }

    #[test]
    fn mean_surplus_drift() {
        let mc = MonteCarlo::new(3, 10_000);
        // started at the stationary mean intensity, E[X_t - u] / t is the margin exactly
        let m = e1(1e9).with_lambda0(2.0);
        let s = summarize(&mc, |rng| {
            Ok((simulate_surplus(&m, 50.0, rng)?.surplus_end - m.u) / 50.0)
        })
        .unwrap();
        assert!(
            (s.mean() - m.net_profit_margin()).abs() < 3.0 * s.stderr(),
            "{}",
            s.mean()
        );
        // from lambda0 = a the transient is visible but small
        let m = e1(1e9);
        let s = summarize(&mc, |rng| {
            Ok((simulate_surplus(&m, 50.0, rng)?.surplus_end - m.u) / 50.0)
        })
        .unwrap();
        let exact = m.c - m.hawkes.expected_count(1.0, 50.0) * m.claim.mean() / 50.0;
        assert!((s.mean() - exact).abs() < 3.0 * s.stderr());
    }

    #[test]
    fn trivial_crude_cases() {
        let mc = MonteCarlo::new(4, 1000);
        assert_eq!(crude_ruin_mc(&e1(1e6), 50.0, &mc).unwrap().value, 0.0);
        assert_eq!(crude_ruin_mc(&e1(1.0), 0.0, &mc).unwrap().value, 0.0);
        assert_eq!(clustered_ruin_mc(&e1(1.0), 0.0, &mc).unwrap().value, 0.0);
        assert!(crude_ruin_mc(&e1(1.0), 1.0, &MonteCarlo::new(4, 0)).is_err());
    }

    #[test]
    fn clustered_claim_moments() {
        let h = HawkesParams::new(1.0, 2.0, DistributionSpec::exponential(1.0)).unwrap();
        let mc = MonteCarlo::new(5, 100_000);
        for claim in [
            DistributionSpec::deterministic(1.0),
            DistributionSpec::exponential(1.0),
        ] {
            let s = summarize(&mc, |rng| sample_clustered_claim(&h, &claim, rng)).unwrap();
            assert!(
                (s.mean() - 2.0).abs() < 3.0 * s.stderr(),
                "{claim:?}: {}",
                s.mean()
            );
        }
        let flat = HawkesParams::new(1.0, 2.0, DistributionSpec::deterministic(0.0)).unwrap();
        let mut rng = stream(6, 0);
        let mut rng2 = stream(6, 0);
        let u = DistributionSpec::exponential(1.0);
        // singleton clusters: one claim draw after the (deterministic) base mark
        for _ in 0..100 {
            let x = sample_clustered_claim(&flat, &u, &mut rng).unwrap();
            let _ = flat.shock.sample(&mut rng2);
            assert_eq!(x, u.sample(&mut rng2));
        }
    }

    #[test]
    fn compound_poisson_exponential_closed_form() {
        let h = HawkesParams::new(1.0, 2.0, DistributionSpec::deterministic(0.0)).unwrap();
        let m = RiskModel::new(h, 2.0, DistributionSpec::exponential(1.0), 1.0, 1.0).unwrap();
        let exact = 0.5 * (-0.5f64).exp();
        let est = clustered_ruin_mc(&m, 200.0, &MonteCarlo::new(7, 100_000)).unwrap();
        assert!(est.within_sigma(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn coupled_paths_dominate() {
        let m = e1(2.0);
        let mc = MonteCarlo::new(8, 1000);
        let paths: Vec<CoupledPath> = mc
            .map(|_, rng| simulate_coupled(&m, 100.0, rng))
            .into_iter()
            .collect::<Result<_>>()
            .unwrap();
        for p in &paths {
            assert!(p.min_gap >= -1e-9, "{p:?}");
            assert!(!p.ruined || p.clustered_ruined);
        }
        assert!(paths.iter().any(|p| p.clustered_ruined && !p.ruined));
    }

    #[test]
    fn crude_monotone_in_horizon_and_capital() {
        let mc = MonteCarlo::new(9, 20_000);
        let h = [5.0, 20.0, 80.0].map(|t| crude_ruin_mc(&e1(2.0), t, &mc).unwrap());
        for w in h.windows(2) {
            // same streams: coupled paths make this monotone pathwise
            assert!(w[0].value <= w[1].value);
        }
        let u = [0.0, 2.0, 6.0].map(|u| crude_ruin_mc(&e1(u), 80.0, &mc).unwrap());
        for w in u.windows(2) {
            assert!(w[0].value >= w[1].value);
        }
    }

    #[test]
    fn length_quantile_is_monotone() {
        let h = HawkesParams::new(1.0, 2.0, DistributionSpec::exponential(1.0)).unwrap();
        let mc = MonteCarlo::new(10, 20_000);
        let q50 = cluster_length_quantile(&h, 0.5, &mc).unwrap();
        let q90 = cluster_length_quantile(&h, 0.9, &mc).unwrap();
        // P(L = 0) = P(no offspring) = 2/3
        assert_eq!(q50, 0.0);
        assert!(q90 > 0.0);
    }

    #[test]
    fn curve_matches_per_capital_runs() {
        // identical streams drive identical paths, so the indicators coincide
        let mc = MonteCarlo::new(11, 5000);
        let grid = [0.0, 1.0, 3.0, 7.0];
        let curve = crude_ruin_curve(&e1(0.0), &grid, 60.0, &mc).unwrap();
        for (e, &u) in curve.iter().zip(&grid) {
            assert_eq!(
                e.value,
                crude_ruin_mc(&e1(u), 60.0, &mc).unwrap().value,
                "u = {u}"
            );
        }
    }
}
