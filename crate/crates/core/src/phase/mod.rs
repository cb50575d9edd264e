//! Synthetic phase retrieval: instances, reconstruction and export.

mod export;
mod instance;
mod reconstruct;

pub use export::{write_npy, write_pgm};
pub use instance::{
    box_support, cup_object, fourier_intensities, synthesize, synthesize_from_object,
    InstanceSidecar, PhaseInstance,
};
pub use reconstruct::{
    aligned_error, interiority_check, reconstruct, ReconstructOptions, Reconstruction, StartPoint,
};
