//! Fixed-dimension linear algebra shared by the solver and the renderer.
//!
//! Convention, fixed project-wide: `Mat3` is row-major and multiplies
//! column vectors on the right (`y = m * v`).

mod mat3;
mod quat;
pub mod sph;
mod vec3;

pub use mat3::Mat3;
pub use quat::Quat;
pub use sph::SphKernel;
pub use vec3::Vec3;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("kernel support radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
}
