//! Concrete projection operators.

mod affine;
mod approx;
mod boxset;
mod exact;
mod fourier_magnitude;
mod halfspace;
mod magnitude;
mod support;
mod tilted;

pub use affine::{project_affine, AffineSet};
pub use approx::project_regularized_approx;
pub use boxset::BoxSet;
pub use exact::{project_regularized_exact, project_regularized_exact_from, KktSolution};
pub use fourier_magnitude::{project_fourier_magnitude, FourierMagnitudeSet};
pub use halfspace::{Ball, Halfspace};
pub use magnitude::{project_magnitude, BoxMagnitudeSet};
pub use support::SupportNonnegSet;
pub use tilted::TiltedProjector;
