//! Software Gaussian-splat renderer over the particle simulation: kernel
//! projection, depth-ordered compositing, physically based shading against
//! an environment map, fluid thickness and absorption, soft shadows, and
//! foam splatting.

pub mod buffers;
pub mod camera;
pub mod composite;
pub mod envmap;
pub mod fluid;
pub mod foam;
pub mod image;
pub mod kernel;
pub mod pipeline;
pub mod project;
pub mod raster;
pub mod shade;
pub mod shadow;

pub use buffers::{FrameBuffers, RenderLayer};
pub use camera::Camera;
pub use envmap::EnvironmentMap;
pub use image::ImageRgb;
pub use kernel::{deform_kernel, GaussianKernel};
pub use pipeline::{render_frame, FluidView, RenderOptions, SceneView};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("buffer dimensions {0}x{1} do not match {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("deformation gradient is singular (det = {0})")]
    SingularDeformation(f64),
    #[error("kernel invariant violated: {0}")]
    InvalidKernel(String),
}
