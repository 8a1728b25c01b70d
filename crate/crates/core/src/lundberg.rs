//! The tilting system behind the exponential martingale
//! `M_t = exp(-r X_t - alpha lambda_t - theta t)`:
//!
//! ```text
//! f_r(alpha) = alpha beta + M_U(r) M_Y(-alpha) - 1 = 0   (alpha(r): maximal root)
//! theta(r)   = -c r - alpha(r) beta a
//! ```
//!
//! `f_r` is convex in `alpha`, so every root search is bracketed between the
//! convex minimiser and a point where `f_r > 0`. No Newton steps: the MGF
//! domain walls make unguarded steps unsafe.

use serde::Serialize;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::hawkes::sample_cluster;
use crate::mc::MonteCarlo;
use crate::risk::{summarize, RiskModel};
use crate::stats::EstimateCI;

const MAX_BISECT: usize = 400;

/// Bisect on a sign change of `g` with `g(lo) <= 0 < g(hi)` down to
/// floating-point resolution or `tol`.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Minimum of the convex map `alpha -> f_r(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerMin {
    /// May be `-inf` when `f_r` decreases without bound (degenerate shocks).
    pub argmin: f64,
    pub value: f64,
}

/// Model data entering the tilting equations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LundbergSystem {
    pub a: f64,
    pub beta: f64,
    pub c: f64,
    pub claim: DistributionSpec,
    pub shock: DistributionSpec,
}

impl LundbergSystem {
    pub fn new(model: &RiskModel) -> Self {
        Self {
            a: model.hawkes.a,
            beta: model.hawkes.beta,
            c: model.c,
            claim: model.claim.clone(),
            shock: model.hawkes.shock.clone(),
        }
    }

    /// `f_r(alpha)`; `+inf` outside the MGF domains.
    pub fn f(&self, r: f64, alpha: f64) -> f64 {
        let mu = self.claim.mgf(r);
        let my = self.shock.mgf(-alpha);
        if mu.is_infinite() || my.is_infinite() {
            return f64::INFINITY;
        }
        alpha * self.beta + mu * my - 1.0
    }

    /// `d f_r / d alpha = beta - M_U(r) M_Y'(-alpha)`, increasing in `alpha`.
    fn f_slope(&self, mu: f64, alpha: f64) -> f64 {
        let d = self.shock.mgf_derivative(-alpha);
        if d.is_infinite() {
            f64::NEG_INFINITY
        } else {
            self.beta - mu * d
        }
    }

    fn claim_mgf(&self, r: f64) -> Result<f64> {
        let mu = self.claim.mgf(r);
        if mu.is_finite() {
            Ok(mu)
        } else {
            Err(Error::OutsideMgfDomain {
                s: r,
                boundary: self.claim.mgf_boundary(),
            })
        }
    }

    /// Minimise `f_r` by bisection on its (monotone) slope.
    pub fn inner_min(&self, r: f64) -> Result<InnerMin> {
        let mu = self.claim_mgf(r)?;
        let slope = |al: f64| self.f_slope(mu, al);
        let s_y = self.shock.mgf_boundary();

        let mut hi = 1.0;
        let mut grown = 0;
        while slope(hi) <= 0.0 {
            hi *= 2.0;
            grown += 1;
            if grown > 1100 {
                return Err(Error::Numerical(format!(
                    "f_r has no finite minimiser at r = {r}"
                )));
            }
        }

        let lo = if s_y == 0.0 {
            // alpha >= 0 only; the minimum may sit on the wall
            Some(0.0).filter(|&z| slope(z) < 0.0)
        } else if s_y.is_finite() {
            (1..=60)
                .map(|k| -s_y + s_y * 0.5f64.powi(k))
                .find(|&z| slope(z) < 0.0)
        } else {
            (0..1100)
                .map(|k| -(2f64.powi(k)))
                .take_while(|z| z.is_finite())
                .find(|&z| slope(z) < 0.0)
        };

        let argmin = match lo {
            Some(lo) => {
                let (l, h) = bisect(lo, hi, 0.0, slope);
                0.5 * (l + h)
            }
            None if s_y == 0.0 => 0.0,
            None if s_y.is_finite() => -s_y + s_y * 0.5f64.powi(60),
            None => {
                return Ok(InnerMin {
                    argmin: f64::NEG_INFINITY,
                    value: f64::NEG_INFINITY,
                })
            }
        };
        Ok(InnerMin {
            argmin,
            value: self.f(r, argmin),
        })
    }

    /// `alpha(r)`, the maximal root of `f_r`.
    pub fn alpha(&self, r: f64) -> Result<f64> {
        let m = self.inner_min(r)?;
        if r == 0.0 && m.argmin < 0.0 {
            // f_0(0) = 0 and 0 lies right of the minimiser
            return Ok(0.0);
        }
        if m.value > 0.0 {
            return Err(Error::NoRealRoot {
                r,
                r_max: self.r_max()?,
            });
        }
        if m.value == 0.0 {
            return Ok(m.argmin);
        }
        let f = |al: f64| self.f(r, al);
        let mut hi = m.argmin.max(0.0) + 1.0;
        while f(hi) <= 0.0 {
            hi = 2.0 * hi + 1.0;
        }
        let lo = if m.argmin.is_finite() {
            m.argmin
        } else {
            let mut lo = -1.0;
            while f(lo) > 0.0 {
                lo *= 2.0;
            }
            lo
        };
        let (l, h) = bisect(lo, hi, 0.0, f);
        // the upper end has f > 0; report the closer endpoint
        Ok(if f(h).abs() < f(l).abs() { h } else { l })
    }

    /// `theta(r) = -c r - alpha(r) beta a`.
    pub fn theta(&self, r: f64) -> Result<f64> {
        Ok(-self.c * r - self.alpha(r)? * self.beta * self.a)
    }

    /// Largest `r` for which `f_r` has a real root; `+inf` if it has one for
    /// every `r` below the claim MGF boundary.
    pub fn r_max(&self) -> Result<f64> {
        let s_u = self.claim.mgf_boundary();
        let min_at = |r: f64| self.inner_min(r).map(|m| m.value);
        let candidates: Vec<f64> = if s_u.is_finite() {
            (1..=52).map(|k| s_u * (1.0 - 0.5f64.powi(k))).collect()
        } else {
            (0..64).map(|k| 2f64.powi(k)).collect()
        };
        let mut hi = None;
        for r in candidates {
            if min_at(r)? > 0.0 {
                hi = Some(r);
                break;
            }
        }
        let Some(hi) = hi else {
            return Ok(f64::INFINITY);
        };
        let g = |r: f64| min_at(r).unwrap_or(f64::INFINITY);
        let (lo, _) = bisect(0.0, hi, 0.0, g);
        Ok(lo)
    }

    /// Premium ceiling `a (beta gamma + 1)^2 / (2 (beta gamma - 1) mu)` when
    /// claims and shocks are both exponential.
    pub fn exp_exp_ceiling(&self) -> Option<f64> {
        let mu = self.claim.exponential_rate()?;
        let gamma = self.shock.exponential_rate()?;
        let bg = self.beta * gamma;
        (bg > 1.0).then(|| self.a * (bg + 1.0).powi(2) / (2.0 * (bg - 1.0) * mu))
    }

    /// `alpha'(r)` from implicit differentiation of `f_r(alpha(r)) = 0`.
    pub fn alpha_derivative(&self, r: f64) -> Result<f64> {
        let al = self.alpha(r)?;
        let num = self.claim.mgf_derivative(r) * self.shock.mgf(-al);
        let den = self.beta - self.claim.mgf(r) * self.shock.mgf_derivative(-al);
        Ok(-num / den)
    }

    /// `theta'(r) = -c - beta a alpha'(r)`.
    pub fn theta_derivative(&self, r: f64) -> Result<f64> {
        Ok(-self.c - self.beta * self.a * self.alpha_derivative(r)?)
    }

    /// Adjustment coefficient: the positive root of `theta`.
    ///
    /// `theta(0) = 0`, `theta'(0) < 0` under net profit, and `theta` is convex,
    /// so there is at most one positive root below `r_max`.
    pub fn solve(&self) -> Result<LundbergSolution> {
        let r_max = self.r_max()?;
        let theta = |r: f64| self.theta(r);

        let top = if r_max.is_finite() {
            let t = theta(r_max)?;
            if t < 0.0 {
                return Err(Error::NoPositiveRoot {
                    theta_at_r_max: t,
                    r_max,
                    premium_ceiling: self.exp_exp_ceiling(),
                });
            }
            r_max
        } else {
            let s_u = self.claim.mgf_boundary();
            let candidates: Vec<f64> = if s_u.is_finite() {
                (1..=52).map(|k| s_u * (1.0 - 0.5f64.powi(k))).collect()
            } else {
                (0..64).map(|k| 2f64.powi(k)).collect()
            };
            let mut found = None;
            let mut last = f64::NAN;
            for r in candidates {
                last = theta(r)?;
                if last >= 0.0 {
                    found = Some(r);
                    break;
                }
            }
            found.ok_or(Error::NoPositiveRoot {
                theta_at_r_max: last,
                r_max,
                premium_ceiling: self.exp_exp_ceiling(),
            })?
        };

        let mut lo = None;
        for k in 1..=200 {
            let r = top * 0.5f64.powi(k);
            if theta(r)? < 0.0 {
                lo = Some(r);
                break;
            }
        }
        let lo = lo.ok_or_else(|| Error::Numerical("theta is not negative near zero".into()))?;
        let g = |r: f64| theta(r).unwrap_or(f64::INFINITY);
        let (l, h) = bisect(lo, top, 1e-16, g);
        let r = if g(h).abs() < g(l).abs() { h } else { l };
        Ok(LundbergSolution {
            adjustment: r,
            r_max,
            alpha_at_adjustment: self.alpha(r)?,
            system: self.clone(),
        })
    }
}

/// Solution of the tilting system for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LundbergSolution {
    /// Adjustment coefficient `R > 0`.
    pub adjustment: f64,
    pub r_max: f64,
    /// `alpha(R) < 0`.
    pub alpha_at_adjustment: f64,
    #[serde(skip)]
    pub system: LundbergSystem,
}

impl LundbergSolution {
    pub fn alpha(&self, r: f64) -> Result<f64> {
        self.system.alpha(r)
    }

    pub fn theta(&self, r: f64) -> Result<f64> {
        self.system.theta(r)
    }
}

pub fn alpha_of(model: &RiskModel, r: f64) -> Result<f64> {
    LundbergSystem::new(model).alpha(r)
}

pub fn theta_of(model: &RiskModel, r: f64) -> Result<f64> {
    LundbergSystem::new(model).theta(r)
}

pub fn r_max_of(model: &RiskModel) -> Result<f64> {
    LundbergSystem::new(model).r_max()
}

pub fn adjustment_coefficient(model: &RiskModel) -> Result<LundbergSolution> {
    model.validate()?;
    LundbergSystem::new(model).solve()
}

/// Closed forms for exponential shocks `Exp(gamma)` and claims `Exp(mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpExpClosedForm {
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub c: f64,
    pub adjustment: f64,
    pub r_max: f64,
    /// Third root of `theta`, always at or beyond `mu`.
    pub r3: f64,
    pub ceiling: f64,
    pub ceiling_ok: bool,
}

impl ExpExpClosedForm {
    pub fn new(a: f64, beta: f64, gamma: f64, mu: f64, c: f64) -> Result<Self> {
        let bg = beta * gamma;
        if bg <= 1.0 {
            return Err(Error::ShockRateTooSmall { product: bg });
        }
        let outflow = a * bg / (mu * (bg - 1.0));
        if c <= outflow {
            return Err(Error::NetProfit {
                premium: c,
                outflow,
            });
        }
        let disc = (a * (1.0 + bg)).powi(2) - 2.0 * a * c * (bg - 1.0) * mu + (c * mu).powi(2);
        let head = -a + a * bg + c * mu;
        let r3 = (head + disc.sqrt()) / (2.0 * c);
        if r3 < mu {
            return Err(Error::Numerical(format!(
                "third root {r3} below claim rate {mu}"
            )));
        }
        let ceiling = a * (bg + 1.0).powi(2) / (2.0 * (bg - 1.0) * mu);
        Ok(Self {
            a,
            beta,
            gamma,
            mu,
            c,
            adjustment: (head - disc.sqrt()) / (2.0 * c),
            r_max: (bg - 1.0).powi(2) / (bg + 1.0).powi(2) * mu,
            r3,
            ceiling,
            ceiling_ok: c < ceiling,
        })
    }

    /// Larger root of `alpha^2 beta + alpha (beta gamma - 1) + mu gamma / (mu - r) - gamma = 0`.
    pub fn alpha(&self, r: f64) -> f64 {
        let (b, g, m) = (self.beta, self.gamma, self.mu);
        let inner = (-4.0 * r * b * g + (b * g - 1.0).powi(2) * (m - r)) * (m - r);
        (1.0 - g * b) / (2.0 * b) + inner.max(0.0).sqrt() / (2.0 * b * (m - r))
    }

    pub fn theta(&self, r: f64) -> f64 {
        -self.c * r - self.alpha(r) * self.beta * self.a
    }
}

/// Closed forms for a model whose claims and shocks are both exponential.
pub fn closed_form_exp(model: &RiskModel) -> Option<Result<ExpExpClosedForm>> {
    let gamma = model.hawkes.shock.exponential_rate()?;
    let mu = model.claim.exponential_rate()?;
    Some(ExpExpClosedForm::new(
        model.hawkes.a,
        model.hawkes.beta,
        gamma,
        mu,
        model.c,
    ))
}

/// Monte Carlo residual of the compound-Poisson Lundberg equation of the
/// clustered process, `a (E[e^{R U~}] - 1) - c R`, which vanishes at the
/// adjustment coefficient. Conditions on the cluster size:
/// `E[e^{R U~} | kappa] = M_U(R)^{kappa + 1}`.
pub fn clustered_adjustment_check(
    model: &RiskModel,
    r: f64,
    mc: &MonteCarlo,
) -> Result<EstimateCI> {
    let mu = model.claim.mgf(r);
    if !mu.is_finite() {
        return Err(Error::OutsideMgfDomain {
            s: r,
            boundary: model.claim.mgf_boundary(),
        });
    }
    let s = summarize(mc, |rng| {
        let k = sample_cluster(&model.hawkes, rng)?.claim_count();
        Ok(mu.powi(k as i32))
    })?;
    let a = model.hawkes.a;
    Ok(EstimateCI {
        value: a * (s.mean() - 1.0) - model.c * r,
        stderr: a * s.stderr(),
        ..EstimateCI::from_summary(&s)
    })
}
