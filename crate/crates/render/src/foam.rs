//! Foam, spray, and bubble particles: heuristic synthesis from the fluid
//! state, advection, and additive splatting with class-specific kernels.

use splat_core::fluid::NeighborGrid;
use splat_core::math::{SphKernel, Vec3};

use crate::camera::Camera;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoamClass {
    Spray,
    Foam,
    Bubble,
}

#[derive(Debug, Clone, Copy)]
pub struct FoamParticle {
    pub position: Vec3,
    pub velocity: Vec3,
    pub class: FoamClass,
    /// Remaining lifetime in seconds; expired particles are removed.
    pub lifetime: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FoamParams {
    /// Minimum surface-particle speed before foam can seed.
    pub min_speed: f64,
    /// Minimum neighborhood velocity-divergence magnitude (1/s).
    pub divergence_threshold: f64,
    /// Seconds a foam particle lives.
    pub lifetime: f64,
    /// Seed at most one particle per eligible surface particle every
    /// `seed_stride` steps (keeps synthesis bounded and deterministic).
    pub seed_stride: u64,
    /// Splat intensity per class.
    pub foam_weight: f64,
    pub spray_weight: f64,
    pub bubble_weight: f64,
    /// On-screen kernel radius in pixels at `reference_depth`.
    pub base_radius_px: f64,
    pub reference_depth: f64,
    /// Intensity curve strength: `I <- 1 - exp(-c I)`.
    pub curve_strength: f64,
}

impl Default for FoamParams {
    fn default() -> Self {
        FoamParams {
            min_speed: 0.5,
            divergence_threshold: 4.0,
            lifetime: 0.8,
            seed_stride: 4,
            foam_weight: 1.0,
            spray_weight: 0.35,
            bubble_weight: 1.0,
            base_radius_px: 2.0,
            reference_depth: 1.0,
            curve_strength: 1.0,
        }
    }
}

/// Fluid state the foam stage reads.
pub struct FoamFluidState<'a> {
    pub positions: &'a [Vec3],
    pub velocities: &'a [Vec3],
    pub surface_flags: &'a [bool],
    pub kernel_radius: f64,
    pub mass_over_rest_density: f64,
}

/// Advance the foam system one step: advect with the local fluid velocity,
/// expire lifetimes, reclassify by submersion, and seed new particles at
/// fast, strongly converging or diverging surface particles.
pub fn generate_foam(
    foam: &mut Vec<FoamParticle>,
    fluid: &FoamFluidState,
    params: &FoamParams,
    gravity: Vec3,
    dt: f64,
    step_index: u64,
) {
    let n = fluid.positions.len();
    let kernel = SphKernel::new(fluid.kernel_radius).expect("positive kernel radius");
    let grid = if n > 0 {
        Some(NeighborGrid::build(fluid.positions, fluid.kernel_radius))
    } else {
        None
    };

    // Advect + age + reclassify.
    foam.retain_mut(|p| {
        p.lifetime -= dt;
        if p.lifetime <= 0.0 {
            return false;
        }
        let mut weight = 0.0;
        let mut mean_v = Vec3::ZERO;
        let mut density_fraction = 0.0;
        if let Some(grid) = &grid {
            grid.for_each_within(fluid.positions, p.position, None, fluid.kernel_radius, |j, _| {
                let w = kernel.value_unchecked(p.position - fluid.positions[j as usize]);
                weight += w;
                mean_v += fluid.velocities[j as usize] * w;
                density_fraction += fluid.mass_over_rest_density * w;
            });
        }
        if weight > 1e-12 {
            p.velocity = mean_v / weight;
        } else {
            // Free flight outside the fluid.
            p.velocity += gravity * dt;
        }
        p.position += p.velocity * dt;
        p.class = if density_fraction > 0.7 {
            FoamClass::Bubble
        } else if density_fraction < 0.2 {
            FoamClass::Spray
        } else {
            FoamClass::Foam
        };
        true
    });

    // Seed at energetic surface particles.
    let Some(grid) = &grid else { return };
    for (i, &pos) in fluid.positions.iter().enumerate() {
        if !fluid.surface_flags[i] {
            continue;
        }
        if (step_index + i as u64) % params.seed_stride != 0 {
            continue;
        }
        let v = fluid.velocities[i];
        if v.norm() < params.min_speed {
            continue;
        }
        let mut divergence = 0.0;
        let mut count = 0usize;
        grid.for_each_within(fluid.positions, pos, Some(i as u32), fluid.kernel_radius, |j, d2| {
            let dv = fluid.velocities[j as usize] - v;
            let dp = fluid.positions[j as usize] - pos;
            divergence += dv.dot(dp) / (d2 + 0.01 * fluid.kernel_radius * fluid.kernel_radius);
            count += 1;
        });
        if count == 0 {
            continue;
        }
        divergence /= count as f64;
        if divergence.abs() < params.divergence_threshold {
            continue;
        }
        foam.push(FoamParticle {
            position: pos,
            velocity: v,
            class: FoamClass::Foam,
            lifetime: params.lifetime,
        });
    }
}

/// Additive intensity splat: filled discs for foam (bright) and spray
/// (dim), a hollow ring for bubbles, radius shrinking with view depth, then
/// the bounding curve `I <- 1 - exp(-c I)`.
pub fn foam_splat(foam: &[FoamParticle], camera: &Camera, params: &FoamParams) -> Vec<f32> {
    let mut intensity = vec![0.0f64; camera.width * camera.height];
    for p in foam {
        let Some((pixel, depth)) = camera.project(p.position) else {
            continue;
        };
        let radius = (params.base_radius_px * params.reference_depth / depth).clamp(0.5, 24.0);
        let (weight, ring) = match p.class {
            FoamClass::Foam => (params.foam_weight, false),
            FoamClass::Spray => (params.spray_weight, false),
            FoamClass::Bubble => (params.bubble_weight, true),
        };
        let ring_half_width = (0.35 * radius).max(0.6);
        let reach = radius + ring_half_width + 1.0;
        let x0 = ((pixel[0] - reach).floor().max(0.0)) as usize;
        let y0 = ((pixel[1] - reach).floor().max(0.0)) as usize;
        let x1 = ((pixel[0] + reach).ceil().min(camera.width as f64 - 1.0)).max(0.0) as usize;
        let y1 = ((pixel[1] + reach).ceil().min(camera.height as f64 - 1.0)).max(0.0) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - pixel[0];
                let dy = y as f64 + 0.5 - pixel[1];
                let d = (dx * dx + dy * dy).sqrt();
                let inside = if ring {
                    (d - radius).abs() <= ring_half_width
                } else {
                    d <= radius
                };
                if inside {
                    intensity[y * camera.width + x] += weight;
                }
            }
        }
    }
    intensity
        .into_iter()
        .map(|i| (1.0 - (-params.curve_strength * i).exp()) as f32)
        .collect()
}
