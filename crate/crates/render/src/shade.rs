use splat_core::math::Vec3;

use crate::envmap::EnvironmentMap;
use crate::kernel::GaussianKernel;

/// Kernel color for a view direction:
/// `c = d + s (.) L_s(reflect(view, n), roughness)`, clamped to `[0, 1]`.
/// Without an environment map the specular term vanishes.
pub fn shade_kernel(
    kernel: &GaussianKernel,
    view_dir: Vec3,
    env: Option<&EnvironmentMap>,
) -> [f64; 3] {
    let specular_light = match env {
        Some(env) => {
            let r = reflect(view_dir, kernel.normal);
            env.sample(r, kernel.roughness)
        }
        None => [0.0; 3],
    };
    let mut out = [0.0f64; 3];
    for c in 0..3 {
        out[c] = (kernel.diffuse[c] + kernel.specular[c] * specular_light[c]).clamp(0.0, 1.0);
    }
    out
}

/// Mirror `v` about the plane perpendicular to `n` (`n` unit length).
pub fn reflect(v: Vec3, n: Vec3) -> Vec3 {
    v - n * (2.0 * v.dot(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageRgb;

    fn kernel_with(specular: [f64; 3], roughness: f64) -> GaussianKernel {
        let mut k = GaussianKernel::sphere(Vec3::ZERO, 0.1);
        k.diffuse = [0.2, 0.3, 0.4];
        k.specular = specular;
        k.roughness = roughness;
        k.normal = Vec3::Y;
        k
    }

    #[test]
    fn zero_specular_returns_diffuse() {
        let env = EnvironmentMap::from_image(ImageRgb::filled(16, 8, [1.0; 3]));
        let k = kernel_with([0.0; 3], 0.5);
        let c = shade_kernel(&k, Vec3::Z, Some(&env));
        assert_eq!(c, [0.2, 0.3, 0.4]);
    }

    #[test]
    fn constant_env_adds_uniform_specular() {
        let env = EnvironmentMap::from_image(ImageRgb::filled(16, 8, [0.5; 3]));
        let k = kernel_with([1.0; 3], 0.3);
        let c = shade_kernel(&k, Vec3::Z, Some(&env));
        assert!((c[0] - 0.7).abs() < 1e-5);
        assert!((c[1] - 0.8).abs() < 1e-5);
        assert!((c[2] - 0.9).abs() < 1e-5);
    }

    #[test]
    fn output_saturates_at_one() {
        let env = EnvironmentMap::from_image(ImageRgb::filled(16, 8, [10.0; 3]));
        let k = kernel_with([1.0; 3], 0.05);
        let c = shade_kernel(&k, Vec3::Z, Some(&env));
        assert_eq!(c, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn near_mirror_roughness_reads_fine_mip() {
        // Env: top hemisphere red, bottom black. A downward view reflecting
        // off an upward normal looks up and should read red.
        let mut img = ImageRgb::filled(32, 16, [0.0; 3]);
        for y in 0..8 {
            for x in 0..32 {
                img.set(x, y, [1.0, 0.0, 0.0]);
            }
        }
        let env = EnvironmentMap::from_image(img);
        let mut k = kernel_with([1.0; 3], 0.05);
        k.diffuse = [0.0; 3];
        let view = Vec3::new(0.0, -1.0, 0.4).normalized(0.0).unwrap();
        let c = shade_kernel(&k, view, Some(&env));
        assert!(c[0] > 0.8, "reflected color {c:?}");
        assert!(c[1] < 0.1);
    }

    #[test]
    fn reflect_is_an_involution_on_directions() {
        let n = Vec3::new(0.3, 0.9, -0.2).normalized(0.0).unwrap();
        let v = Vec3::new(0.5, -0.6, 0.7).normalized(0.0).unwrap();
        let r = reflect(v, n);
        assert!((r.norm() - 1.0).abs() < 1e-12);
        assert!((reflect(r, n) - v).norm() < 1e-12);
    }
}
