//! Acceptance checks on the reference models, each returning a named
//! pass/fail result with the numbers behind it.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::asymptotics::{cramer_curve, heavy_tail_curve};
use crate::distributions::DistributionSpec;
use crate::error::Result;
use crate::hawkes::{sample_cluster, simulate_cluster_process, simulate_thinning, HawkesParams};
use crate::lundberg::adjustment_coefficient;
use crate::mc::{derive_seed, stream, Executor, MonteCarlo};
use crate::measure_change::{is_ruin_estimate, martingale_unit_mean_check};
use crate::risk::{cluster_length_quantile, clustered_ruin_mc, crude_ruin_mc, RiskModel};
use crate::stationary::{ks_stationary_check, DEFAULT_BURN_IN, DEFAULT_THIN};
use crate::stats::{chi_squared_two_sample, Summary};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
    pub all_passed: bool,
}

/// Seed and executor shared by all checks.
#[derive(Debug, Clone, Copy)]
pub struct VerifyContext {
    pub seed: u64,
    pub executor: Executor,
}

impl VerifyContext {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            executor: Executor::default(),
        }
    }

    fn mc(&self, id: u8, n: usize) -> MonteCarlo {
        MonteCarlo::new(derive_seed(self.seed, id as u64), n).with_executor(self.executor)
    }
}

/// a = 1, beta = 2, Y ~ Exp(1), U ~ Exp(1), c = 3.
pub fn e1_model(u: f64) -> RiskModel {
    let h = HawkesParams::new(1.0, 2.0, DistributionSpec::exponential(1.0)).expect("valid");
    RiskModel::new(h, 3.0, DistributionSpec::exponential(1.0), u, 1.0).expect("valid")
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "lundberg_closed_form"),
    (2, "martingale_unit_mean"),
    (3, "estimator_cross_validation"),
    (4, "lundberg_bound"),
    (5, "cramer_flatness"),
    (6, "sampler_equivalence"),
    (7, "cluster_moments"),
    (8, "stationary_law"),
    (9, "sandwich_bounds"),
    (10, "heavy_tail_ratio"),
    (11, "degenerate_reduction"),
];

type Check = fn(&VerifyContext) -> Result<(bool, String)>;

fn check_fn(id: u8) -> Option<(Check, Option<Duration>)> {
    let secs = |s: u64| Some(Duration::from_secs(s));
    Some(match id {
        1 => (lundberg_closed_form as Check, secs(1)),
        2 => (martingale_unit_mean, secs(120)),
        3 => (estimator_cross_validation, secs(300)),
        4 => (lundberg_bound, None),
        5 => (cramer_flatness, secs(600)),
        6 => (sampler_equivalence, secs(120)),
        7 => (cluster_moments, None),
        8 => (stationary_law, None),
        9 => (sandwich_bounds, None),
        10 => (heavy_tail_ratio, secs(1200)),
        11 => (degenerate_reduction, None),
        _ => return None,
    })
}

/// Run one criterion; errors count as failures.
pub fn run_criterion(id: u8, ctx: &VerifyContext) -> Option<CriterionResult> {
    let name = CRITERIA.iter().find(|c| c.0 == id)?.1;
    let (f, limit) = check_fn(id)?;
    let start = Instant::now();
    let out = f(ctx);
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match out {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!(
                "; runtime {:.1}s over {}s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            ));
        }
    }
    Some(CriterionResult {
        id,
        name,
        passed,
        detail,
        seconds: elapsed.as_secs_f64(),
    })
}

pub fn run_all(ctx: &VerifyContext) -> VerifyReport {
    let results: Vec<CriterionResult> = CRITERIA
        .iter()
        .filter_map(|c| run_criterion(c.0, ctx))
        .collect();
    VerifyReport {
        seed: ctx.seed,
        all_passed: results.iter().all(|r| r.passed),
        results,
    }
}

fn lundberg_closed_form(_: &VerifyContext) -> Result<(bool, String)> {
    let s = adjustment_coefficient(&e1_model(1.0))?;
    let dr = (s.adjustment - (2.0 - SQRT3) / 3.0).abs();
    let da = (s.alpha_at_adjustment - (SQRT3 - 2.0) / 2.0).abs();
    let dm = (s.r_max - 1.0 / 9.0).abs();
    Ok((
        dr < 1e-9 && da < 1e-9 && dm < 1e-9,
        format!(
            "R={:.12} |dR|={dr:.1e} |dalpha|={da:.1e} |dr_max|={dm:.1e}",
            s.adjustment
        ),
    ))
}

fn martingale_unit_mean(ctx: &VerifyContext) -> Result<(bool, String)> {
    let m = e1_model(2.0);
    let sol = adjustment_coefficient(&m)?;
    let r = sol.adjustment;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (rr, label)) in [(r / 2.0, "R/2"), (r, "R")].into_iter().enumerate() {
        for (j, t) in [1.0, 5.0].into_iter().enumerate() {
            let mc = ctx.mc(2, 100_000).reseeded((2 * k + j) as u64);
            let e = martingale_unit_mean_check(&m, &sol, rr, t, &mc)?;
            ok &= e.within_sigma(1.0, 3.0);
            parts.push(format!("r={label},t={t}: {:.4}±{:.4}", e.value, e.stderr));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn estimator_cross_validation(ctx: &VerifyContext) -> Result<(bool, String)> {
    let sol = adjustment_coefficient(&e1_model(0.0))?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, u) in [0.0, 1.0, 2.0].into_iter().enumerate() {
        let m = e1_model(u);
        let mc = ctx.mc(3, 100_000).reseeded(k as u64);
        let is = is_ruin_estimate(&m, &sol, &mc, None)?.estimate;
        let crude = crude_ruin_mc(&m, 200.0, &mc.reseeded(100))?;
        ok &= is.overlaps(&crude);
        parts.push(format!(
            "u={u}: is {:.4}±{:.4} crude {:.4}±{:.4}",
            is.value, is.stderr, crude.value, crude.stderr
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn lundberg_bound(ctx: &VerifyContext) -> Result<(bool, String)> {
    let m = e1_model(2.0).with_lambda0(2.0);
    let sol = adjustment_coefficient(&m)?;
    let est = is_ruin_estimate(&m, &sol, &ctx.mc(4, 1_000_000), None)?;
    Ok((
        est.bound_violations == 0 && est.estimate.value <= est.bound,
        format!(
            "violations={} max weight/bound={:.6} psi={:.5} bound={:.5}",
            est.bound_violations, est.max_weight_ratio, est.estimate.value, est.bound
        ),
    ))
}

fn cramer_flatness(ctx: &VerifyContext) -> Result<(bool, String)> {
    let m = e1_model(0.0);
    let sol = adjustment_coefficient(&m)?;
    let rep = cramer_curve(
        &m,
        &sol,
        &[5.0, 10.0, 20.0, 40.0],
        &ctx.mc(5, 100_000),
        None,
    )?;
    let flat = rep.is_flat(3.0);
    let c_ok = rep.target > 0.0 && rep.target <= 1.0;
    let z: Vec<String> = rep
        .points
        .iter()
        .map(|p| format!("{:.4}±{:.4}", p.scaled, p.scaled_stderr))
        .collect();
    Ok((
        flat && c_ok,
        format!(
            "scaled [{}] flat={flat} C_hat={:.4}",
            z.join(", "),
            rep.target
        ),
    ))
}

fn sampler_equivalence(ctx: &VerifyContext) -> Result<(bool, String)> {
    let h = e1_model(0.0).hawkes;
    let horizon = 10.0;
    let mc = ctx.mc(6, 10_000);
    let thin: Vec<usize> = mc
        .map(|_, rng| simulate_thinning(&h, h.a, horizon, rng).map(|e| e.len()))
        .into_iter()
        .collect::<Result<_>>()?;
    let clus: Vec<usize> = mc
        .reseeded(1)
        .map(|_, rng| simulate_cluster_process(&h, horizon, rng).map(|e| e.len()))
        .into_iter()
        .collect::<Result<_>>()?;
    let chi = chi_squared_two_sample(&thin, &clus);
    let st: Summary = thin.iter().map(|&k| k as f64).collect();
    let sc: Summary = clus.iter().map(|&k| k as f64).collect();
    let target = 19.0;
    let ok = chi.p_value > 1e-3
        && (st.mean() - target).abs() <= 3.0 * st.stderr()
        && (sc.mean() - target).abs() <= 3.0 * sc.stderr();
    Ok((
        ok,
        format!(
            "chi2={:.2} dof={} p={:.4}; thinning {:.3}±{:.3}; cluster {:.3}±{:.3}",
            chi.statistic,
            chi.dof,
            chi.p_value,
            st.mean(),
            st.stderr(),
            sc.mean(),
            sc.stderr()
        ),
    ))
}

fn cluster_moments(ctx: &VerifyContext) -> Result<(bool, String)> {
    let h = e1_model(0.0).hawkes;
    let sizes: Vec<Result<f64>> = ctx
        .mc(7, 100_000)
        .map(|_, rng| sample_cluster(&h, rng).map(|c| c.claim_count() as f64));
    let s: Summary = sizes
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    Ok((
        (s.mean() - 2.0).abs() <= 3.0 * s.stderr(),
        format!(
            "E[kappa+1]={:.4}±{:.4} (mu={})",
            s.mean(),
            s.stderr(),
            h.branching_ratio()?
        ),
    ))
}

fn stationary_law(ctx: &VerifyContext) -> Result<(bool, String)> {
    let h = e1_model(0.0).hawkes;
    let mut rng = stream(derive_seed(ctx.seed, 8), 0);
    let c = ks_stationary_check(&h, h.a, DEFAULT_BURN_IN, 10_000, DEFAULT_THIN, &mut rng)?;
    Ok((
        c.ks < 0.05,
        format!("ks={:.4} mean={:.3} var={:.3}", c.ks, c.mean, c.var),
    ))
}

fn sandwich_bounds(ctx: &VerifyContext) -> Result<(bool, String)> {
    let m = e1_model(0.0);
    let sol = adjustment_coefficient(&m)?;
    let base = ctx.mc(9, 100_000);
    let l1 = cluster_length_quantile(&m.hawkes, 0.9, &base.reseeded(99))?;
    let horizon = 500.0;
    let mut ok = true;
    let mut parts = vec![format!("l1={l1:.3}")];
    for (k, u) in [1.0, 2.0, 5.0].into_iter().enumerate() {
        let k = 3 * k as u64;
        let psi = is_ruin_estimate(&m.with_u(u), &sol, &base.reseeded(k), None)?.estimate;
        let upper = clustered_ruin_mc(&m.with_u(u), horizon, &base.reseeded(k + 1))?;
        let lower = clustered_ruin_mc(&m.with_u(u + l1 * m.c), horizon, &base.reseeded(k + 2))?;
        let up_ok = upper.value - psi.value >= -3.0 * upper.stderr.hypot(psi.stderr);
        let lo_ok = psi.value - lower.value >= -3.0 * psi.stderr.hypot(lower.stderr);
        ok &= up_ok && lo_ok;
        parts.push(format!(
            "u={u}: {:.4} >= {:.4} >= {:.4}",
            upper.value, psi.value, lower.value
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn heavy_tail_ratio(ctx: &VerifyContext) -> Result<(bool, String)> {
    let m = e1_model(0.0);
    let m = RiskModel::new(m.hawkes, 3.0, DistributionSpec::pareto(2.0, 1.0), 0.0, 1.0)?;
    let rep = heavy_tail_curve(&m, &[10.0, 20.0, 50.0], 1000.0, &ctx.mc(10, 1_000_000))?;
    let last = rep.points.last().expect("non-empty grid");
    let rel = last.scaled / last.target - 1.0;
    let ratios: Vec<String> = rep
        .points
        .iter()
        .map(|p| format!("u={}: {:.3}±{:.3}", p.u, p.scaled, p.scaled_stderr))
        .collect();
    Ok((
        rel.abs() <= 0.3,
        format!(
            "{} target={:.3} rel@50={:+.3}",
            ratios.join("; "),
            rep.target,
            rel
        ),
    ))
}

fn degenerate_reduction(ctx: &VerifyContext) -> Result<(bool, String)> {
    let h = HawkesParams::new(1.0, 2.0, DistributionSpec::deterministic(0.0))?;
    let m = RiskModel::new(h, 2.0, DistributionSpec::exponential(1.0), 1.0, 1.0)?;
    let target = 0.5 * (-0.5f64).exp();
    let sol = adjustment_coefficient(&m)?;
    let mc = ctx.mc(11, 100_000);
    let is = is_ruin_estimate(&m, &sol, &mc, None)?.estimate;
    let crude = crude_ruin_mc(&m, 200.0, &mc.reseeded(1))?;
    Ok((
        is.within_sigma(target, 3.0) && crude.within_sigma(target, 3.0),
        format!(
            "target={target:.4} is {:.4}±{:.4} crude {:.4}±{:.4}",
            is.value, is.stderr, crude.value, crude.stderr
        ),
    ))
}
