//! Alternating projections with inexact and regularized projection steps.

pub mod algorithms;
pub mod divergence;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod phase;
pub mod point;
pub mod projectors;
pub mod regularity;
pub mod set;
pub mod trace;

pub use divergence::{kl_divergence, BregmanDistance, ForwardMap, RegularizedSet};
pub use error::{Error, Result};
pub use point::{Point, ScalarKind};
pub use set::{NormalCone, SetOracle};
pub use trace::{IterationTrace, TerminationReason, TraceRecord};
