use splat_core::math::Vec3;

use crate::camera::Camera;
use crate::kernel::GaussianKernel;

/// A kernel's screen-space footprint: 2D mean in pixels, 2D covariance
/// (xx, xy, yy), and the camera-space depth of the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2d {
    pub mean: [f64; 2],
    pub cov: [f64; 3],
    pub depth: f64,
}

impl Splat2d {
    /// Inverse covariance (conic), or `None` when degenerate.
    pub fn conic(&self) -> Option<[f64; 3]> {
        let [a, b, c] = self.cov;
        let det = a * c - b * b;
        if det <= 1e-18 {
            return None;
        }
        Some([c / det, -b / det, a / det])
    }

    /// Conservative footprint radius in pixels at the 3-sigma cutoff.
    pub fn radius(&self) -> f64 {
        let [a, b, c] = self.cov;
        let mid = 0.5 * (a + c);
        let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        3.0 * (mid + disc).max(0.0).sqrt()
    }
}

/// First-order perspective projection of the kernel's covariance:
/// `Sigma_2D = J W A W^T J^T` with `W` the world-to-camera rotation and
/// `J` the perspective Jacobian at the center. Culled behind the near
/// plane.
pub fn project_kernel(kernel: &GaussianKernel, camera: &Camera) -> Option<Splat2d> {
    let q = camera.to_camera(kernel.center);
    if q.z < camera.near {
        return None;
    }
    let inv_z = 1.0 / q.z;
    let mean = [
        camera.fx * q.x * inv_z + camera.cx,
        camera.fy * q.y * inv_z + camera.cy,
    ];

    // Rows of the 2x3 Jacobian of (fx x/z, fy y/z).
    let j0 = Vec3::new(camera.fx * inv_z, 0.0, -camera.fx * q.x * inv_z * inv_z);
    let j1 = Vec3::new(0.0, camera.fy * inv_z, -camera.fy * q.y * inv_z * inv_z);

    let world_cov = kernel.covariance();
    let cam_cov = camera.rotation * world_cov * camera.rotation.transpose();
    let cov = [
        j0.dot(cam_cov * j0),
        j0.dot(cam_cov * j1),
        j1.dot(cam_cov * j1),
    ];
    Some(Splat2d { mean, cov, depth: q.z })
}
