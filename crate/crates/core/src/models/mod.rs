//! Worked applications: Donsker's delta, self-intersection local times of
//! Gaussian processes, and Gauss kernels.

pub mod donsker;
pub mod gauss_kernel;
pub mod silt;

use crate::chaos::ProfileError;
use crate::fractional::FracError;
use crate::quadrature::QuadratureError;
use crate::special::GammaError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate increment: {0}")]
    Singular(String),
    #[error("divergent: {0}")]
    Divergent(String),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}
