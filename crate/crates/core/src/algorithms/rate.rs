use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{IterationTrace, TerminationReason};

/// Minimum number of records `measure_rate` accepts.
pub const MIN_RATE_RECORDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub c: f64,
    pub gamma: f64,
    pub eta: f64,
    pub r_linear_rate: f64,
}

/// `eta = c sqrt(1 - gamma^2) + gamma sqrt(1 - c^2)`, the contraction factor
/// of inexact alternating projections. The R-linear rate is `eta` when the odd
/// set is prox-regular and `sqrt(eta)` otherwise.
pub fn predict_rate(c: f64, gamma: f64, m_prox_regular: bool) -> Result<RatePrediction> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("c must lie in [0, 1), got {c}")));
    }
    let limit = (1.0 - c * c).sqrt();
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
    }
    if gamma >= limit {
        return Err(Error::RateHypothesis { gamma, limit });
    }
    let eta = c * (1.0 - gamma * gamma).sqrt() + gamma * limit;
    let r_linear_rate = if m_prox_regular { eta } else { eta.sqrt() };
    Ok(RatePrediction { c, gamma, eta, r_linear_rate })
}

/// Per-iterate linear rate of a trace: the exponentiated least-squares slope
/// of `ln |x^{j+1} - x^j|` over the trailing `tail_fraction` of single steps.
pub fn measure_rate(trace: &IterationTrace, tail_fraction: f64) -> Result<f64> {
    if trace.len() < MIN_RATE_RECORDS {
        return Err(Error::TooFewRecords(trace.len()));
    }
    if trace.reason == TerminationReason::StalledGap {
        return Err(Error::NonconvergentTail("run ended with a stalled gap".into()));
    }
    measure_rate_from_norms(&trace.step_sequence(), tail_fraction)
}

pub fn measure_rate_from_norms(norms: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    if norms.len() < MIN_RATE_RECORDS {
        return Err(Error::TooFewRecords(norms.len()));
    }
    let take = ((norms.len() as f64 * tail_fraction).ceil() as usize).clamp(3, norms.len());
    let tail = &norms[norms.len() - take..];
    if let Some(v) = tail.iter().find(|v| v.is_nan() || **v <= 0.0 || v.is_infinite()) {
        return Err(Error::NonconvergentTail(format!("step norm {v} in the fitted tail")));
    }
    let n = tail.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let logs: Vec<f64> = tail.iter().map(|v| v.ln()).collect();
    let mean_y = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    let rate = (sxy / sxx).exp();
    if rate >= 1.0 {
        return Err(Error::NonconvergentTail(format!("fitted rate {rate} is not below 1")));
    }
    Ok(rate)
}
