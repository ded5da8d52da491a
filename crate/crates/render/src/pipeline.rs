//! Whole-frame orchestration: background, shaded solids, fluid pass,
//! shadows, foam, and the final composite.

use rayon::prelude::*;

use splat_core::math::Vec3;

use crate::buffers::{FrameBuffers, RenderLayer};
use crate::camera::Camera;
use crate::envmap::EnvironmentMap;
use crate::fluid::{render_fluid, FluidPassSettings, FluidRenderInput};
use crate::foam::{foam_splat, FoamParams, FoamParticle};
use crate::image::ImageRgb;
use crate::kernel::GaussianKernel;
use crate::project::project_kernel;
use crate::raster::{splat_color, ColorSplat};
use crate::shade::shade_kernel;
use crate::shadow::{shadow_pass, ShadowSettings};

pub struct RenderOptions {
    /// Per-channel absorption coefficients for the fluid interior.
    pub absorption: [f64; 3],
    /// Refraction distortion in pixels per unit of screen-space normal.
    pub refraction_offset_px: f64,
    pub fluid_specular: f64,
    pub fluid_roughness: f64,
    pub shadows: bool,
    pub shadow: ShadowSettings,
    /// Light-view resolution multiplier for the shadow pass.
    pub shadow_resolution_factor: usize,
    pub foam_enabled: bool,
    pub foam: FoamParams,
    /// Flat background when no environment map is present.
    pub background_color: [f32; 3],
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            absorption: [0.30, 0.12, 0.06],
            refraction_offset_px: 8.0,
            fluid_specular: 1.0,
            fluid_roughness: 0.05,
            shadows: true,
            shadow: ShadowSettings::default(),
            shadow_resolution_factor: 3,
            foam_enabled: true,
            foam: FoamParams::default(),
            background_color: [0.0; 3],
        }
    }
}

/// Fluid particle state for one frame.
pub struct FluidView<'a> {
    pub positions: &'a [Vec3],
    pub surface_flags: &'a [bool],
    pub particle_radius: f64,
    pub kernel_radius: f64,
    pub mass_over_rest_density: f64,
}

/// Everything the renderer needs for one frame.
pub struct SceneView<'a> {
    /// Solid kernels, already deformed and positioned for this frame.
    pub solid_kernels: &'a [GaussianKernel],
    pub fluid: Option<FluidView<'a>>,
    pub foam: &'a [FoamParticle],
    pub env: Option<&'a EnvironmentMap>,
    /// Light pose for the shadow pass (at main-camera resolution; the
    /// pipeline scales it up internally).
    pub light: Option<&'a Camera>,
}

/// Render one frame into the per-camera buffer stack.
pub fn render_frame(view: &SceneView, camera: &Camera, opts: &RenderOptions) -> FrameBuffers {
    let (w, h) = (camera.width, camera.height);
    let mut buffers = FrameBuffers::new(w, h);

    // Background: environment radiance along each pixel ray, or flat color.
    let background = match view.env {
        Some(env) => {
            let data: Vec<[f32; 3]> = (0..w * h)
                .into_par_iter()
                .map(|i| {
                    let px = (i % w) as f64 + 0.5;
                    let py = (i / w) as f64 + 0.5;
                    let s = env.sample(camera.ray_dir([px, py]), 0.0);
                    [
                        (s[0] as f32).clamp(0.0, 1.0),
                        (s[1] as f32).clamp(0.0, 1.0),
                        (s[2] as f32).clamp(0.0, 1.0),
                    ]
                })
                .collect();
            ImageRgb { width: w, height: h, data }
        }
        None => ImageRgb::filled(w, h, opts.background_color),
    };

    // Solid pass: shade per kernel along the center view direction, splat.
    let eye = camera.eye();
    let solid_splats: Vec<ColorSplat> = view
        .solid_kernels
        .par_iter()
        .filter_map(|k| {
            let splat = project_kernel(k, camera)?;
            let view_dir = (k.center - eye).normalized(1e-12).unwrap_or(Vec3::Z);
            Some(ColorSplat {
                splat,
                color: shade_kernel(k, view_dir, view.env),
                opacity: k.opacity,
            })
        })
        .collect();
    let solids = splat_color(&solid_splats, w, h);

    // What the fluid refracts: solids composited over the background.
    let mut behind_fluid = vec![[0.0f32; 3]; w * h];
    for i in 0..w * h {
        for c in 0..3 {
            behind_fluid[i][c] =
                solids.color[i][c] + (1.0 - solids.alpha[i]) * background.data[i][c];
        }
    }

    // Fluid pass.
    let (fluid_layer, thickness) = match &view.fluid {
        Some(fluid) => {
            let input = FluidRenderInput {
                positions: fluid.positions,
                surface_flags: fluid.surface_flags,
                particle_radius: fluid.particle_radius,
                kernel_radius: fluid.kernel_radius,
                mass_over_rest_density: fluid.mass_over_rest_density,
            };
            let settings = FluidPassSettings {
                absorption: opts.absorption,
                refraction_offset_px: opts.refraction_offset_px,
                specular: opts.fluid_specular,
                roughness: opts.fluid_roughness,
            };
            render_fluid(&input, camera, view.env, &behind_fluid, &settings)
        }
        None => (RenderLayer::new(w, h), vec![0.0; w * h]),
    };

    // Merged geometry depth for shadow reprojection.
    let mut depth = vec![f32::INFINITY; w * h];
    for i in 0..w * h {
        depth[i] = solids.depth[i].min(fluid_layer.depth[i]);
    }

    let shadow = match (opts.shadows, view.light) {
        (true, Some(light)) => {
            let light_camera = light.scaled(opts.shadow_resolution_factor.max(1));
            let mut occluders: Vec<GaussianKernel> = view.solid_kernels.to_vec();
            if let Some(fluid) = &view.fluid {
                occluders.extend(
                    fluid
                        .positions
                        .iter()
                        .map(|&p| GaussianKernel::sphere(p, fluid.particle_radius)),
                );
            }
            shadow_pass(&occluders, &light_camera, camera, &depth, &opts.shadow)
        }
        _ => vec![1.0; w * h],
    };

    let foam = if opts.foam_enabled {
        foam_splat(view.foam, camera, &opts.foam)
    } else {
        vec![0.0; w * h]
    };

    let color = crate::composite::composite(&background, &solids, &fluid_layer, &foam, &shadow)
        .expect("pipeline buffers share dimensions");

    buffers.color = color.data;
    buffers.depth = depth;
    buffers.thickness = thickness;
    buffers.foam = foam;
    buffers.shadow = shadow;
    buffers
}
