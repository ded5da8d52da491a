//! Turn a validated config into a live scene plus the per-body render
//! machinery (kernel assets, interpolation bindings, rest neighborhoods).

use anyhow::{Context, Result};
use rayon::prelude::*;

use splat_core::fluid::NeighborGrid;
use splat_core::math::{Mat3, SphKernel, Vec3};
use splat_core::scene::Scene;
use splat_core::solid::{
    compute_deformation_gradient, poisson_sample_volume, BodyMode, BodySpec, GmlsBinding,
    TriangleMesh, DEFAULT_KNN,
};
use splat_render::kernel::{deform_kernel, GaussianKernel};
use splat_render::foam::FoamParticle;

use crate::asset;
use crate::config::{BodyModeConfig, EmitterConfig, SceneConfig};
use crate::framedump::{
    FoamRecord, FrameDump, KernelTransform, ParticleRecord, FLUID_KIND,
};

/// Render-side state for one body.
pub struct BuiltBody {
    pub rest_kernels: Vec<GaussianKernel>,
    pub bindings: Vec<GmlsBinding>,
    /// Rest-configuration k-NN per particle (body-local indices).
    pub rest_neighbors: Vec<Vec<u32>>,
    pub deformation_kernel: SphKernel,
    pub first_particle: u32,
    pub particle_count: u32,
}

pub struct BuiltScene {
    pub scene: Scene,
    pub bodies: Vec<BuiltBody>,
}

pub fn build_scene(config: &SceneConfig) -> Result<BuiltScene> {
    let mut scene = Scene::new(config.solver.settings());
    if let Some(domain) = &config.domain {
        scene.add_box_boundary(
            Vec3::new(domain.min[0], domain.min[1], domain.min[2]),
            Vec3::new(domain.max[0], domain.max[1], domain.max[2]),
        );
    }

    let mut bodies = Vec::new();
    for (i, body) in config.bodies.iter().enumerate() {
        let mut mesh = TriangleMesh::load_obj(&body.mesh)
            .with_context(|| format!("bodies[{i}]: loading {}", body.mesh.display()))?;
        for v in &mut mesh.vertices {
            *v = *v * body.scale
                + Vec3::new(body.translate[0], body.translate[1], body.translate[2]);
        }
        let samples = poisson_sample_volume(&mesh, body.sample_radius, body.sample_seed)
            .with_context(|| format!("bodies[{i}]: sampling {}", body.mesh.display()))?;
        anyhow::ensure!(!samples.is_empty(), "bodies[{i}]: no interior samples (radius too large?)");

        let spec = BodySpec {
            mode: match body.mode {
                BodyModeConfig::Rigid => BodyMode::Rigid,
                BodyModeConfig::Deformable => BodyMode::Deformable,
            },
            compliance: body.compliance,
            sample_radius: body.sample_radius,
            damping: body.damping,
        };
        let mass = body.density * body.sample_radius.powi(3);
        let id = scene.add_body(&samples, spec, mass, body.pinned);
        scene.body_velocity(
            id,
            Vec3::new(body.velocity[0], body.velocity[1], body.velocity[2]),
        );

        // Render machinery: kernel asset plus interpolation stencils.
        let rest_kernels = match &body.kernels {
            Some(path) => asset::load_kernels(path)
                .with_context(|| format!("bodies[{i}]: kernel asset {}", path.display()))?,
            None => Vec::new(),
        };
        let grid = NeighborGrid::build(&samples, 2.0 * body.sample_radius);
        let k = DEFAULT_KNN.min(samples.len().saturating_sub(1)).max(1);
        let bindings: Vec<GmlsBinding> = rest_kernels
            .par_iter()
            .map(|kernel| GmlsBinding::build(kernel.center, &samples, &grid, k.max(4)))
            .collect();
        let rest_neighbors: Vec<Vec<u32>> = (0..samples.len())
            .into_par_iter()
            .map(|p| grid.k_nearest(&samples, samples[p], k, Some(p as u32)))
            .collect();

        let body_ref = &scene.bodies[id.0 as usize];
        bodies.push(BuiltBody {
            rest_kernels,
            bindings,
            rest_neighbors,
            deformation_kernel: SphKernel::new(3.0 * body.sample_radius)
                .expect("positive sample radius"),
            first_particle: body_ref.first_particle,
            particle_count: body_ref.particle_count,
        });
    }

    if let Some(fluid) = &config.fluid {
        scene.set_fluid(fluid.params());
        for block in &fluid.blocks {
            let mut positions =
                Vec::with_capacity(block.count[0] * block.count[1] * block.count[2]);
            for ix in 0..block.count[0] {
                for iy in 0..block.count[1] {
                    for iz in 0..block.count[2] {
                        positions.push(Vec3::new(
                            block.origin[0] + (ix as f64 + 0.5) * fluid.spacing,
                            block.origin[1] + (iy as f64 + 0.5) * fluid.spacing,
                            block.origin[2] + (iz as f64 + 0.5) * fluid.spacing,
                        ));
                    }
                }
            }
            scene.add_fluid_particles(
                &positions,
                Vec3::new(block.velocity[0], block.velocity[1], block.velocity[2]),
            );
        }
    }

    Ok(BuiltScene { scene, bodies })
}

/// Emit a particle patch if the emitter fires at this step.
pub fn run_emitter(scene: &mut Scene, emitter: &EmitterConfig, spacing: f64, step: u64) {
    if step < emitter.start {
        return;
    }
    if let Some(stop) = emitter.stop {
        if step >= stop {
            return;
        }
    }
    if (step - emitter.start) % emitter.every != 0 {
        return;
    }
    let dir = Vec3::new(
        emitter.direction[0],
        emitter.direction[1],
        emitter.direction[2],
    )
    .normalized(1e-9)
    .expect("validated direction");
    let e1 = dir.any_orthonormal();
    let e2 = dir.cross(e1);
    let origin = Vec3::new(emitter.origin[0], emitter.origin[1], emitter.origin[2]);
    let mut positions = Vec::with_capacity(emitter.size[0] * emitter.size[1]);
    for iu in 0..emitter.size[0] {
        for iv in 0..emitter.size[1] {
            let u = (iu as f64 - (emitter.size[0] as f64 - 1.0) * 0.5) * spacing;
            let v = (iv as f64 - (emitter.size[1] as f64 - 1.0) * 0.5) * spacing;
            positions.push(origin + e1 * u + e2 * v);
        }
    }
    scene.add_fluid_particles(&positions, dir * emitter.speed);
}

/// Per-frame deformed kernel transforms for every body, in body(asset)
/// order: per-particle deformation gradients, interpolated onto the kernel
/// centers, applied to the rest covariances and normals.
pub fn deformed_kernel_transforms(
    scene: &Scene,
    bodies: &[BuiltBody],
) -> Vec<KernelTransform> {
    let positions: Vec<Vec3> = scene.particles.iter().map(|p| p.position).collect();
    let rest: Vec<Vec3> = scene.particles.iter().map(|p| p.rest_position).collect();

    let mut out = Vec::new();
    for body in bodies {
        if body.rest_kernels.is_empty() {
            continue;
        }
        let range = body.first_particle as usize
            ..(body.first_particle + body.particle_count) as usize;
        let local_positions = &positions[range.clone()];
        let local_rest = &rest[range];

        let gradients: Vec<Mat3> = (0..body.particle_count as usize)
            .into_par_iter()
            .map(|p| {
                compute_deformation_gradient(
                    p as u32,
                    local_positions,
                    local_rest,
                    &body.rest_neighbors[p],
                    &body.deformation_kernel,
                )
            })
            .collect();

        let transforms: Vec<KernelTransform> = body
            .rest_kernels
            .par_iter()
            .zip(&body.bindings)
            .map(|(kernel, binding)| {
                let center = binding.interpolate_vec3(local_positions);
                let f = binding.interpolate_mat3(&gradients);
                // The interpolated gradient can drift toward singularity;
                // clamp like the per-particle estimator does.
                let f = splat_core::solid::clamp_singular_values(f, 0.05, 20.0);
                let deformed = deform_kernel(kernel, &f).expect("clamped gradient is invertible");
                KernelTransform {
                    center,
                    rotation: deformed.rotation,
                    scaling: deformed.scaling,
                    normal: deformed.normal,
                }
            })
            .collect();
        out.extend(transforms);
    }
    out
}

/// Assemble a frame dump from the live scene.
pub fn snapshot_frame(
    scene: &Scene,
    bodies: &[BuiltBody],
    foam: &[FoamParticle],
    frame_index: u64,
) -> FrameDump {
    let fluid_surface = scene.fluid.as_ref().map(|f| f.surface.as_slice());
    let mut fluid_slot = vec![usize::MAX; scene.particles.len()];
    for (slot, &g) in scene.fluid_indices().iter().enumerate() {
        fluid_slot[g as usize] = slot;
    }

    let particles = scene
        .particles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (kind, surface) = match p.phase {
                splat_core::xpbd::Phase::Fluid => {
                    let slot = fluid_slot[i];
                    let surface = fluid_surface
                        .and_then(|s| s.get(slot).copied())
                        .unwrap_or(false);
                    (FLUID_KIND, surface)
                }
                splat_core::xpbd::Phase::Solid(id) => (id.0, false),
            };
            ParticleRecord { position: p.position, velocity: p.velocity, kind, surface }
        })
        .collect();

    FrameDump {
        frame_index,
        particles,
        foam: foam.iter().map(FoamRecord::from_particle).collect(),
        kernels: deformed_kernel_transforms(scene, bodies),
    }
}
