use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How far odd iterates travel from `x^{2k}` towards `P_{M_0}(x^{2k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSchedule {
    /// `lambda_k = tau_eps`: odd iterates sit on the boundary of `M_eps`.
    Surface,
    /// `lambda_k = 1`: full extrapolation onto `M_0`.
    ConstantOne,
    /// Per-iteration values; the last entry repeats. Values below `tau_eps`
    /// are raised to it so odd iterates stay in `M_eps`.
    Custom(Vec<f64>),
}

impl LambdaSchedule {
    pub fn id(&self) -> &'static str {
        match self {
            LambdaSchedule::Surface => "surface",
            LambdaSchedule::ConstantOne => "constant_one",
            LambdaSchedule::Custom(_) => "custom",
        }
    }

    pub(crate) fn lambda(&self, k: usize, tau: f64) -> f64 {
        match self {
            LambdaSchedule::Surface => tau,
            LambdaSchedule::ConstantOne => 1.0,
            LambdaSchedule::Custom(v) => v[k.min(v.len() - 1)].clamp(tau, 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if let LambdaSchedule::Custom(v) = self {
            if v.is_empty() {
                return Err(Error::InvalidParameter("custom lambda schedule is empty".into()));
            }
            if let Some(l) = v.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                return Err(Error::InvalidParameter(format!(
                    "lambda values must lie in [0, 1], got {l}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LambdaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSchedule::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|l| l.to_string()).collect();
                write!(f, "custom:{}", parts.join(";"))
            }
            other => f.write_str(other.id()),
        }
    }
}

impl FromStr for LambdaSchedule {
    type Err = Error;

    /// `surface`, `constant_one`, or `custom:0.5;0.7;1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "surface" => return Ok(LambdaSchedule::Surface),
            "constant_one" => return Ok(LambdaSchedule::ConstantOne),
            _ => {}
        }
        let Some(list) = s.strip_prefix("custom:") else {
            return Err(Error::InvalidParameter(format!("unknown lambda schedule `{s}`")));
        };
        let values = list
            .split(';')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad lambda value `{p}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let schedule = LambdaSchedule::Custom(values);
        schedule.validate()?;
        Ok(schedule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InexactAPConfig {
    /// Admissible normal-cone residual of an odd step.
    pub gamma: f64,
    pub max_iterations: usize,
    /// Threshold on single-step norms for `fixed_point`.
    pub fixed_point_tolerance: f64,
    /// Iterations over which the gap must be stable to count as stalled.
    pub stall_window: usize,
    /// Relative change of the gap over the window below which it is stalled.
    pub stall_threshold: f64,
    pub lambda_schedule: LambdaSchedule,
    /// Turn unverifiable or violated acceptance conditions into errors.
    pub strict: bool,
    /// Stop with `tolerance_met` once the gap falls below this value.
    pub feasibility_tolerance: Option<f64>,
    /// Keep every iterate in the trace, not just the final pair.
    pub record_points: bool,
}

impl Default for InexactAPConfig {
    fn default() -> Self {
        InexactAPConfig {
            gamma: 0.5,
            max_iterations: 1000,
            fixed_point_tolerance: 1e-10,
            stall_window: 50,
            stall_threshold: 1e-6,
            lambda_schedule: LambdaSchedule::Surface,
            strict: false,
            feasibility_tolerance: None,
            record_points: false,
        }
    }
}

impl InexactAPConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        for (name, v) in [
            ("fixed_point_tolerance", self.fixed_point_tolerance),
            ("stall_threshold", self.stall_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.feasibility_tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "feasibility_tolerance must be positive, got {t}"
                )));
            }
        }
        if self.stall_window == 0 {
            return Err(Error::InvalidParameter("stall_window must be positive".into()));
        }
        self.lambda_schedule.validate()
    }
}
