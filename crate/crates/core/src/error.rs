use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Branching ratio E[Y]/beta must stay below one.
    #[error("subcriticality violated: branching ratio {ratio} >= 1")]
    Supercritical { ratio: f64 },

    #[error(
        "net profit condition violated: premium {premium} <= expected claim outflow {outflow}"
    )]
    NetProfit { premium: f64, outflow: f64 },

    #[error(
        "clustered net profit condition violated: premium {premium} <= a*E[clustered claim] = {outflow}"
    )]
    ClusteredNetProfit { premium: f64, outflow: f64 },

    /// Exponential shocks need beta*gamma > 1 for the stationary law and closed forms.
    #[error("beta*gamma = {product} must exceed 1")]
    ShockRateTooSmall { product: f64 },

    #[error("argument {s} outside the MGF domain (boundary {boundary})")]
    OutsideMgfDomain { s: f64, boundary: f64 },

    #[error("tilting equation has no real root at r = {r} (r_max = {r_max})")]
    NoRealRoot { r: f64, r_max: f64 },

    #[error("no positive adjustment coefficient: theta(r_max) = {theta_at_r_max} < 0 at r_max = {r_max}{}",
        premium_ceiling.map(|p| format!("; premium must stay below the ceiling {p}")).unwrap_or_default())]
    NoPositiveRoot {
        theta_at_r_max: f64,
        r_max: f64,
        premium_ceiling: Option<f64>,
    },

    #[error(
        "tilted intensity is not recurrent: beta = {beta} <= scaled shock mean {scaled_shock_mean}"
    )]
    NotRecurrent { beta: f64, scaled_shock_mean: f64 },

    #[error("event cap of {cap} events exceeded")]
    EventCapExceeded { cap: usize },

    #[error("claim law is light-tailed; subexponential asymptotics do not apply")]
    LightTailed,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Violated model preconditions, as opposed to failures of a numeric procedure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NoRealRoot { .. }
                | Error::NoPositiveRoot { .. }
                | Error::NotRecurrent { .. }
                | Error::EventCapExceeded { .. }
                | Error::Numerical(_)
        )
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
