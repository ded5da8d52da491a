use splat_core::math::{Mat3, Quat, Vec3};

use crate::RenderError;

/// Anisotropic Gaussian render primitive with shading material.
///
/// The covariance factors as `A = R diag(S^2) R^T` with the scalings stored
/// in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub center: Vec3,
    /// Principal radii, `scaling[0] >= scaling[1] >= scaling[2] > 0`.
    pub scaling: [f64; 3],
    pub rotation: Quat,
    /// Opacity in `[0, 1]`.
    pub opacity: f64,
    pub diffuse: [f64; 3],
    pub specular: [f64; 3],
    /// Roughness in `(0, 1]`, selects the environment mip.
    pub roughness: f64,
    pub normal: Vec3,
}

impl GaussianKernel {
    /// Spherical kernel, the shape used for fluid particles.
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        GaussianKernel {
            center,
            scaling: [radius; 3],
            rotation: Quat::IDENTITY,
            opacity: 1.0,
            diffuse: [1.0; 3],
            specular: [0.0; 3],
            roughness: 1.0,
            normal: Vec3::Y,
        }
    }

    pub fn covariance(&self) -> Mat3 {
        let r = self.rotation.to_mat3();
        let s2 = Mat3::from_diagonal(Vec3::new(
            self.scaling[0] * self.scaling[0],
            self.scaling[1] * self.scaling[1],
            self.scaling[2] * self.scaling[2],
        ));
        r * s2 * r.transpose()
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.center.is_finite() && self.normal.is_finite()) {
            return Err(RenderError::InvalidKernel("non-finite fields".into()));
        }
        if !(self.scaling[0] >= self.scaling[1]
            && self.scaling[1] >= self.scaling[2]
            && self.scaling[2] > 0.0)
        {
            return Err(RenderError::InvalidKernel(format!(
                "scalings must be positive and descending, got {:?}",
                self.scaling
            )));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(RenderError::InvalidKernel(format!(
                "opacity {} outside [0, 1]",
                self.opacity
            )));
        }
        if !(self.roughness > 0.0 && self.roughness <= 1.0) {
            return Err(RenderError::InvalidKernel(format!(
                "roughness {} outside (0, 1]",
                self.roughness
            )));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-6 {
            return Err(RenderError::InvalidKernel("normal must be unit length".into()));
        }
        Ok(())
    }
}

/// Carry a kernel through a deformation gradient: `A' = F A F^T`
/// (re-factored into rotation and descending scalings) and
/// `n' = F^-T n / |F^-T n|`.
pub fn deform_kernel(kernel: &GaussianKernel, f: &Mat3) -> Result<GaussianKernel, RenderError> {
    let det = f.determinant();
    let inv = f
        .inverse()
        .ok_or(RenderError::SingularDeformation(det))?;

    let deformed = *f * kernel.covariance() * f.transpose();
    let (vals, vecs) = deformed.symmetric_eigen();
    let scaling = [
        vals.x.max(0.0).sqrt(),
        vals.y.max(0.0).sqrt(),
        vals.z.max(0.0).sqrt(),
    ];

    let n = inv.transpose() * kernel.normal;
    let normal = n
        .normalized(1e-12)
        .ok_or_else(|| RenderError::SingularDeformation(det))?;

    Ok(GaussianKernel {
        center: kernel.center,
        scaling,
        rotation: Quat::from_mat3(&vecs),
        normal,
        ..kernel.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_kernel() -> GaussianKernel {
        GaussianKernel {
            center: Vec3::new(0.1, 0.2, 0.3),
            scaling: [0.3, 0.2, 0.1],
            rotation: Quat::from_axis_angle(
                Vec3::new(0.2, 1.0, -0.4).normalized(0.0).unwrap(),
                0.8,
            ),
            opacity: 0.7,
            diffuse: [0.5, 0.4, 0.3],
            specular: [1.0, 1.0, 1.0],
            roughness: 0.2,
            normal: Vec3::new(0.0, 0.0, 1.0),
        }
    }

    fn mat_err(a: &Mat3, b: &Mat3) -> f64 {
        a.m.iter()
            .zip(b.m.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_deformation_is_a_no_op() {
        let k = probe_kernel();
        let d = deform_kernel(&k, &Mat3::IDENTITY).unwrap();
        assert!(mat_err(&d.covariance(), &k.covariance()) < 1e-12);
        for (a, b) in d.scaling.iter().zip(k.scaling.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((d.normal - k.normal).norm() < 1e-12);
        assert_eq!(d.opacity, k.opacity);
    }

    #[test]
    fn rotation_conjugates_covariance_and_rotates_normal() {
        let k = probe_kernel();
        let q = Quat::from_axis_angle(Vec3::new(1.0, -0.3, 0.5).normalized(0.0).unwrap(), 1.1);
        let r = q.to_mat3();
        let d = deform_kernel(&k, &r).unwrap();
        let expected = r * k.covariance() * r.transpose();
        assert!(mat_err(&d.covariance(), &expected) < 1e-10);
        assert!((d.normal - r * k.normal).norm() < 1e-10);
    }

    #[test]
    fn axis_aligned_stretch_keeps_aligned_normal() {
        let mut k = probe_kernel();
        k.normal = Vec3::X;
        let f = Mat3::from_diagonal(Vec3::new(2.0, 1.0, 1.0));
        let d = deform_kernel(&k, &f).unwrap();
        assert!((d.normal - Vec3::X).norm() < 1e-12);
    }

    #[test]
    fn singular_deformation_is_an_error() {
        let k = probe_kernel();
        let f = Mat3::from_diagonal(Vec3::new(1.0, 1.0, 0.0));
        assert!(deform_kernel(&k, &f).is_err());
    }

    #[test]
    fn validation_catches_bad_scalings() {
        let mut k = probe_kernel();
        k.scaling = [0.1, 0.2, 0.3];
        assert!(k.validate().is_err());
        let mut k = probe_kernel();
        k.opacity = 1.5;
        assert!(k.validate().is_err());
    }
}
