//! Experiment description shared by the command-line runner and scripts.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{ensure, Result};
use crate::hawkes::HawkesParams;
use crate::risk::RiskModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: f64,
    pub beta: f64,
    pub shock: DistributionSpec,
    pub claim: DistributionSpec,
    pub c: f64,
    #[serde(default)]
    pub u: f64,
    /// Defaults to the baseline `a`.
    #[serde(default)]
    pub lambda0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n: usize,
    pub horizon: f64,
    pub time_cap: Option<f64>,
    pub u_grid: Vec<f64>,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n: 10_000,
            horizon: 200.0,
            time_cap: None,
            u_grid: vec![5.0, 10.0, 20.0, 40.0],
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Is,
    Crude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Cramer,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub method: Method,
    pub mode: Mode,
    pub burn_in: f64,
    pub thin: f64,
    /// Recurrence level; defaults to the stationary mean intensity.
    pub level: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            method: Method::default(),
            mode: Mode::default(),
            burn_in: crate::stationary::DEFAULT_BURN_IN,
            thin: crate::stationary::DEFAULT_THIN,
            level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub options: Options,
}

impl ExperimentConfig {
    pub fn hawkes(&self) -> Result<HawkesParams> {
        HawkesParams::new(self.model.a, self.model.beta, self.model.shock.clone())
    }

    /// Checks every model precondition and returns the risk model.
    pub fn risk_model(&self) -> Result<RiskModel> {
        let m = &self.model;
        RiskModel::new(
            self.hawkes()?,
            m.c,
            m.claim.clone(),
            m.u,
            m.lambda0.unwrap_or(m.a),
        )
    }

    pub fn validate(&self) -> Result<RiskModel> {
        let r = &self.run;
        ensure(r.n >= 1, || "run.n must be at least 1".into())?;
        ensure(r.horizon.is_finite() && r.horizon > 0.0, || {
            format!("run.horizon = {} must be > 0", r.horizon)
        })?;
        ensure(r.time_cap.is_none_or(|t| t > 0.0), || {
            "run.time_cap must be > 0".into()
        })?;
        ensure(r.workers.is_none_or(|w| w >= 1), || {
            "run.workers must be at least 1".into()
        })?;
        let o = &self.options;
        ensure(o.burn_in >= 0.0 && o.thin > 0.0, || {
            "options.burn_in >= 0 and options.thin > 0".into()
        })?;
        self.risk_model()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const E1: &str = r#"{
        "model": {
            "a": 1.0, "beta": 2.0, "c": 3.0, "u": 2.0,
            "shock": {"kind": "exponential", "rate": 1.0},
            "claim": {"kind": "exponential", "rate": 1.0}
        },
        "run": {"seed": 7, "n": 1000}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(E1).unwrap();
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.run.horizon, 200.0);
        assert_eq!(c.options.method, Method::Is);
        let m = c.validate().unwrap();
        assert_eq!(m.lambda0, 1.0);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = E1.replace("\"seed\"", "\"sede\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn names_the_violated_condition() {
        let mut c: ExperimentConfig = serde_json::from_str(E1).unwrap();
        c.model.c = 1.5;
        assert!(matches!(c.validate(), Err(Error::NetProfit { .. })));
        c.model.c = 3.0;
        c.model.beta = 0.9;
        assert!(matches!(c.validate(), Err(Error::Supercritical { .. })));
        c.model.beta = 2.0;
        c.run.n = 0;
        assert!(c.validate().unwrap_err().is_validation());
    }
}
