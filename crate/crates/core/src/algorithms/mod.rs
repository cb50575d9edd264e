//! Exact, inexact and extrapolated alternating projections.

mod config;
mod engine;
mod rate;

pub use config::{InexactAPConfig, LambdaSchedule};
pub use engine::{
    exact_alternating_projections, inexact_alternating_projections, regularized_extrapolated_ap,
};
pub use rate::{
    measure_rate, measure_rate_from_norms, predict_rate, RatePrediction, MIN_RATE_RECORDS,
};
