//! Fluid rendering: thickness-driven absorption color and the fluid splat
//! pass built from simulation particles.

use rayon::prelude::*;

use splat_core::fluid::{find_neighbors, surface_normal, NeighborGrid};
use splat_core::math::{SphKernel, Vec3};

use crate::buffers::RenderLayer;
use crate::camera::Camera;
use crate::envmap::EnvironmentMap;
use crate::image::{bilinear, bilinear_scalar};
use crate::kernel::GaussianKernel;
use crate::project::project_kernel;
use crate::raster::{splat_color, splat_thickness, ColorSplat};
use crate::shade::shade_kernel;

/// Absorption diffuse color: the background behind the kernel, attenuated
/// exponentially by the fluid thickness at the kernel's screen position
/// (`d = exp(-k tau) c_bg` per channel).
///
/// The background lookup is offset by `beta_px` pixels along the screen
/// projection of the kernel normal to imitate the refracted light path;
/// lookups clamp at the image border. Thickness is sampled at the
/// unperturbed center.
pub fn fluid_refraction_color(
    center: Vec3,
    normal: Vec3,
    camera: &Camera,
    thickness: &[f32],
    background: &[[f32; 3]],
    absorption: [f64; 3],
    beta_px: f64,
) -> [f64; 3] {
    let Some((pixel, _)) = camera.project(center) else {
        return [0.0; 3];
    };
    let tau = bilinear_scalar(thickness, camera.width, camera.height, pixel[0], pixel[1]) as f64;

    let n_cam = camera.rotation * normal;
    let bg = bilinear(
        background,
        camera.width,
        camera.height,
        pixel[0] + beta_px * n_cam.x,
        pixel[1] + beta_px * n_cam.y,
    );
    [
        (-absorption[0] * tau).exp() * bg[0] as f64,
        (-absorption[1] * tau).exp() * bg[1] as f64,
        (-absorption[2] * tau).exp() * bg[2] as f64,
    ]
}

/// Fluid particle state needed by the renderer.
pub struct FluidRenderInput<'a> {
    pub positions: &'a [Vec3],
    pub surface_flags: &'a [bool],
    pub particle_radius: f64,
    pub kernel_radius: f64,
    pub mass_over_rest_density: f64,
}

pub struct FluidPassSettings {
    pub absorption: [f64; 3],
    pub refraction_offset_px: f64,
    pub specular: f64,
    pub roughness: f64,
}

/// Render the fluid layer: spherical kernels at every particle, normals
/// from the nearest surface particle, absorption-based diffuse color and a
/// reflective specular term, splatted with depth-ordered compositing.
/// Also returns the additive thickness buffer.
pub fn render_fluid(
    input: &FluidRenderInput,
    camera: &Camera,
    env: Option<&EnvironmentMap>,
    background: &[[f32; 3]],
    settings: &FluidPassSettings,
) -> (RenderLayer, Vec<f32>) {
    let n = input.positions.len();
    if n == 0 {
        return (
            RenderLayer::new(camera.width, camera.height),
            vec![0.0; camera.width * camera.height],
        );
    }
    assert_eq!(input.surface_flags.len(), n);

    // Surface normals recomputed from the particle field.
    let kernel_fn = SphKernel::new(input.kernel_radius).expect("positive kernel radius");
    let lists = find_neighbors(input.positions, input.kernel_radius);
    let normals: Vec<Option<Vec3>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if !input.surface_flags[i] {
                return None;
            }
            surface_normal(
                i as u32,
                input.positions,
                &lists[i],
                &kernel_fn,
                input.mass_over_rest_density,
            )
        })
        .collect();

    // Nearest surface particle with a valid normal, per particle.
    let surface_points: Vec<Vec3> = (0..n)
        .filter(|&i| normals[i].is_some())
        .map(|i| input.positions[i])
        .collect();
    let surface_ids: Vec<usize> = (0..n).filter(|&i| normals[i].is_some()).collect();
    let view_back = |p: Vec3| {
        (camera.eye() - p)
            .normalized(1e-12)
            .unwrap_or(Vec3::Z)
    };
    let assigned_normals: Vec<Vec3> = if surface_points.is_empty() {
        log::warn!("fluid has no surface particles; normals default to view-facing");
        input.positions.iter().map(|&p| view_back(p)).collect()
    } else {
        let grid = NeighborGrid::build(&surface_points, input.kernel_radius.max(1e-9));
        (0..n)
            .into_par_iter()
            .map(|i| {
                if let Some(normal) = normals[i] {
                    return normal;
                }
                let nearest = grid.k_nearest(&surface_points, input.positions[i], 1, None);
                match nearest.first() {
                    Some(&s) => normals[surface_ids[s as usize]].expect("surface set has normals"),
                    None => view_back(input.positions[i]),
                }
            })
            .collect()
    };

    // Thickness from additive splatting, amplitude = particle diameter.
    let projected: Vec<Option<crate::project::Splat2d>> = input
        .positions
        .par_iter()
        .map(|&p| project_kernel(&GaussianKernel::sphere(p, input.particle_radius), camera))
        .collect();
    let thickness_splats: Vec<(crate::project::Splat2d, f64)> = projected
        .iter()
        .flatten()
        .map(|&s| (s, 2.0 * input.particle_radius))
        .collect();
    let thickness = splat_thickness(&thickness_splats, camera.width, camera.height);

    // Shade: absorption diffuse + reflective specular, opacity 1.
    let eye = camera.eye();
    let splats: Vec<ColorSplat> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let splat = projected[i]?;
            let mut kernel = GaussianKernel::sphere(input.positions[i], input.particle_radius);
            kernel.normal = assigned_normals[i];
            kernel.diffuse = fluid_refraction_color(
                input.positions[i],
                kernel.normal,
                camera,
                &thickness,
                background,
                settings.absorption,
                settings.refraction_offset_px,
            );
            kernel.specular = [settings.specular; 3];
            kernel.roughness = settings.roughness;
            kernel.opacity = 1.0;
            let view = (input.positions[i] - eye).normalized(1e-12).unwrap_or(Vec3::Z);
            let color = shade_kernel(&kernel, view, env);
            Some(ColorSplat { splat, color, opacity: kernel.opacity })
        })
        .collect();

    let layer = splat_color(&splats, camera.width, camera.height);
    (layer, thickness)
}
