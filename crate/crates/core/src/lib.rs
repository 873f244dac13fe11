//! Chaos-expansion regularity toolkit.
//!
//! Decides membership of Gaussian functionals in the fractional
//! Malliavin–Watanabe–Sobolev spaces `D^{α,2}` from the Bargmann–Segal norm
//! profile `B(λ) = Σ n! λ^{2n} |F⁽ⁿ⁾|²`, with Monte Carlo and quadrature
//! oracles and three worked models (Donsker's delta, self-intersection local
//! times, Gauss kernels).
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the `*64`
//! aliases below fix double precision.

pub mod chaos;
pub mod fractional;
pub mod gaussian_mc;
pub mod models;
pub mod quadrature;
pub mod regularity;
pub mod scalar;
pub mod special;

pub use chaos::{bs_norm_sq, convergence_radius, gs_norm_sq, ChaosProfile, ProfileError, TailModel};
pub use quadrature::{QuadratureError, QuadratureResult};
pub use scalar::{Extended, Real};

pub type ChaosProfile64 = chaos::ChaosProfile<f64>;
pub type ChaosProfile32 = chaos::ChaosProfile<f32>;
pub type TailModel64 = chaos::TailModel<f64>;
pub type Extended64 = scalar::Extended<f64>;
