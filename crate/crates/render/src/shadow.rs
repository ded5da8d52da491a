//! Variance shadow mapping: splat depth statistics from the light's view,
//! blur, and bound the shadowing probability with Chebyshev's inequality.

use rayon::prelude::*;

use crate::camera::Camera;
use crate::image::bilinear_scalar;
use crate::kernel::GaussianKernel;
use crate::project::project_kernel;
use crate::raster::{splat_color, ColorSplat};

pub struct ShadowSettings {
    /// Box blur half-width applied to the light-view moments (kernel size
    /// `2 b + 1`).
    pub blur: usize,
    /// Depth slack before a point counts as occluded, in world units.
    pub bias: f64,
}

impl Default for ShadowSettings {
    fn default() -> Self {
        ShadowSettings { blur: 2, bias: 0.02 }
    }
}

/// Shadow factor per main-view pixel: alpha-weighted depth mean and square
/// are splatted from `light` (callers pass a light camera already at the
/// boosted resolution), blurred, and every main-view surface point is
/// tested with the Chebyshev bound `sigma^2 / (sigma^2 + (d - mu)^2)` when
/// it lies beyond the mean occluder depth. Unoccluded or out-of-frustum
/// points get factor 1.
pub fn shadow_pass(
    kernels: &[GaussianKernel],
    light: &Camera,
    main: &Camera,
    main_depth: &[f32],
    settings: &ShadowSettings,
) -> Vec<f32> {
    assert_eq!(main_depth.len(), main.width * main.height);

    // Light-view depth moments, encoded through the color rasterizer:
    // channel 0 carries depth, channel 1 depth squared.
    let splats: Vec<ColorSplat> = kernels
        .par_iter()
        .filter_map(|k| {
            let splat = project_kernel(k, light)?;
            Some(ColorSplat {
                splat,
                color: [splat.depth, splat.depth * splat.depth, 0.0],
                opacity: k.opacity,
            })
        })
        .collect();
    let layer = splat_color(&splats, light.width, light.height);

    const FAR: f32 = 1e30;
    let n_light = light.width * light.height;
    let mut mean = vec![FAR; n_light];
    let mut mean_sq = vec![FAR; n_light];
    for i in 0..n_light {
        if layer.alpha[i] > 1e-4 {
            mean[i] = layer.color[i][0] / layer.alpha[i];
            mean_sq[i] = layer.color[i][1] / layer.alpha[i];
        }
    }
    let mean = box_blur(&mean, light.width, light.height, settings.blur);
    let mean_sq = box_blur(&mean_sq, light.width, light.height, settings.blur);

    (0..main.width * main.height)
        .into_par_iter()
        .map(|i| {
            let depth = main_depth[i];
            if !depth.is_finite() {
                return 1.0;
            }
            let px = (i % main.width) as f64 + 0.5;
            let py = (i / main.width) as f64 + 0.5;
            let world = main.unproject([px, py], depth as f64);
            let Some((lpx, ld)) = light.project(world) else {
                return 1.0;
            };
            if lpx[0] < 0.0
                || lpx[1] < 0.0
                || lpx[0] >= light.width as f64
                || lpx[1] >= light.height as f64
            {
                return 1.0;
            }
            let mu = bilinear_scalar(&mean, light.width, light.height, lpx[0], lpx[1]) as f64;
            let mu2 = bilinear_scalar(&mean_sq, light.width, light.height, lpx[0], lpx[1]) as f64;
            if ld <= mu + settings.bias {
                return 1.0;
            }
            let variance = (mu2 - mu * mu).max(1e-12);
            let diff = ld - mu;
            (variance / (variance + diff * diff)).clamp(0.0, 1.0) as f32
        })
        .collect()
}

fn box_blur(data: &[f32], width: usize, height: usize, radius: usize) -> Vec<f32> {
    if radius == 0 {
        return data.to_vec();
    }
    let r = radius as isize;
    // Horizontal then vertical pass, border clamped.
    let mut tmp = vec![0.0f32; data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0f32;
            for dx in -r..=r {
                let sx = (x as isize + dx).clamp(0, width as isize - 1) as usize;
                acc += data[y * width + sx];
            }
            tmp[y * width + x] = acc / (2 * radius + 1) as f32;
        }
    }
    let mut out = vec![0.0f32; data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0f32;
            for dy in -r..=r {
                let sy = (y as isize + dy).clamp(0, height as isize - 1) as usize;
                acc += tmp[sy * width + x];
            }
            out[y * width + x] = acc / (2 * radius + 1) as f32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use splat_core::math::Vec3;

    #[test]
    fn no_occluders_means_fully_lit() {
        let main = Camera::look_at(
            Vec3::new(0.0, 1.0, -2.0),
            Vec3::ZERO,
            Vec3::Y,
            60.0,
            16,
            16,
            0.01,
        );
        let light = Camera::look_at(
            Vec3::new(0.0, 3.0, 0.0),
            Vec3::ZERO,
            Vec3::Z,
            90.0,
            48,
            48,
            0.01,
        );
        let depth = vec![2.0f32; 16 * 16];
        let factors = shadow_pass(&[], &light, &main, &depth, &ShadowSettings::default());
        assert!(factors.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn factors_stay_in_unit_interval() {
        let main = Camera::look_at(
            Vec3::new(0.0, 1.0, -2.0),
            Vec3::ZERO,
            Vec3::Y,
            60.0,
            16,
            16,
            0.01,
        );
        let light = Camera::look_at(
            Vec3::new(0.3, 3.0, 0.1),
            Vec3::ZERO,
            Vec3::Z,
            90.0,
            48,
            48,
            0.01,
        );
        let kernels: Vec<GaussianKernel> = (0..20)
            .map(|i| {
                GaussianKernel::sphere(
                    Vec3::new((i % 5) as f64 * 0.1 - 0.2, 1.0, (i / 5) as f64 * 0.1 - 0.2),
                    0.08,
                )
            })
            .collect();
        let depth = vec![2.5f32; 16 * 16];
        let factors = shadow_pass(&kernels, &light, &main, &depth, &ShadowSettings::default());
        assert!(factors.iter().all(|&f| (0.0..=1.0).contains(&f)));
    }

    #[test]
    fn slab_between_light_and_ground_casts_umbra() {
        // Ground plane viewed from the side; slab of kernels above it;
        // light straight overhead.
        let main = Camera::look_at(
            Vec3::new(0.0, 0.8, -2.5),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::Y,
            60.0,
            32,
            32,
            0.01,
        );
        let light = Camera::look_at(
            Vec3::new(0.0, 5.0, 0.0),
            Vec3::ZERO,
            Vec3::Z,
            60.0,
            96,
            96,
            0.01,
        );
        let mut kernels = Vec::new();
        for ix in -6..=6 {
            for iz in -6..=6 {
                let mut k = GaussianKernel::sphere(
                    Vec3::new(ix as f64 * 0.05, 1.0, iz as f64 * 0.05),
                    0.05,
                );
                k.opacity = 1.0;
                kernels.push(k);
            }
        }
        // Main-view depths of the ground plane y = 0 under each pixel ray.
        let mut depth = vec![f32::INFINITY; 32 * 32];
        for py in 0..32 {
            for px in 0..32 {
                let ray = main.ray_dir([px as f64 + 0.5, py as f64 + 0.5]);
                let eye = main.eye();
                if ray.y >= -1e-6 {
                    continue;
                }
                let t = -eye.y / ray.y;
                let hit = eye + ray * t;
                if hit.x.abs() < 0.6 && hit.z.abs() < 0.6 {
                    depth[py * 32 + px] = main.to_camera(hit).z as f32;
                }
            }
        }
        let factors = shadow_pass(&kernels, &light, &main, &depth, &ShadowSettings::default());
        // Probe the pixel that sees the ground directly under the slab center.
        let (probe, _) = main.project(Vec3::ZERO).unwrap();
        let idx = probe[1] as usize * 32 + probe[0] as usize;
        assert!(
            factors[idx] < 0.1,
            "umbra factor {} at ground center",
            factors[idx]
        );
    }
}
