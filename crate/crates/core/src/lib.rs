//! Particle-based physics: a compliant constraint-projection solver with
//! position-based fluids (density + surface tension), shape-matched solids,
//! and least-squares motion transfer onto render kernels.

pub mod fluid;
pub mod math;
pub mod scene;
pub mod solid;
pub mod xpbd;

pub use scene::{Body, HalfSpace, Scene, StepError, StepStats};
