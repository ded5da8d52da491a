//! The sim / render / metrics / validate drivers behind the CLI.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use splat_core::fluid;
use splat_core::math::Vec3;
use splat_render::foam::{generate_foam, FoamFluidState, FoamParticle};
use splat_render::image::write_ppm;
use splat_render::{render_frame, EnvironmentMap, FluidView, GaussianKernel, SceneView};

use crate::asset;
use crate::config::SceneConfig;
use crate::framedump::{frame_file_name, FrameDump, FLUID_KIND};
use crate::metrics::anisotropy_metric;
use crate::setup::{build_scene, run_emitter, snapshot_frame};

pub const MANIFEST_NAME: &str = "manifest.toml";

/// `sim`: advance the scene `frames` steps, dumping one frame per step
/// plus a manifest that pins every resolved setting.
pub fn run_sim(scene_path: &Path, frames: u64, out_dir: &Path) -> Result<()> {
    let config = SceneConfig::load(scene_path)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let manifest = toml::to_string_pretty(&config.resolved())?;
    std::fs::write(out_dir.join(MANIFEST_NAME), manifest)?;

    let mut built = build_scene(&config)?;
    let mut foam: Vec<FoamParticle> = Vec::new();
    let foam_params = config.render.foam_params();
    let spacing = config.fluid.as_ref().map(|f| f.spacing).unwrap_or(0.0);

    for frame in 0..frames {
        if let Some(fluid_cfg) = &config.fluid {
            for emitter in &fluid_cfg.emitters {
                run_emitter(&mut built.scene, emitter, spacing, frame);
            }
        }

        let step_index = built.scene.step_index;
        if let Err(err) = built.scene.step() {
            let diagnostic = out_dir.join(format!("diagnostic_frame_{frame:05}.bin"));
            let dump = snapshot_frame(&built.scene, &built.bodies, &foam, frame);
            dump.write(&diagnostic).ok();
            bail!("step {frame} failed ({err}); last good state dumped to {}", diagnostic.display());
        }

        if config.render.foam {
            if let Some(fluid_sys) = &built.scene.fluid {
                let indices = built.scene.fluid_indices();
                let positions: Vec<Vec3> = indices
                    .iter()
                    .map(|&i| built.scene.particles[i as usize].position)
                    .collect();
                let velocities: Vec<Vec3> = indices
                    .iter()
                    .map(|&i| built.scene.particles[i as usize].velocity)
                    .collect();
                let surface = &fluid_sys.surface;
                if surface.len() == positions.len() {
                    let state = FoamFluidState {
                        positions: &positions,
                        velocities: &velocities,
                        surface_flags: surface,
                        kernel_radius: fluid_sys.params.kernel_radius,
                        mass_over_rest_density: fluid_sys.params.mass_over_rest_density(),
                    };
                    generate_foam(
                        &mut foam,
                        &state,
                        &foam_params,
                        built.scene.settings.gravity,
                        built.scene.settings.dt,
                        step_index,
                    );
                }
            }
        }

        let dump = snapshot_frame(&built.scene, &built.bodies, &foam, frame);
        dump.write(&out_dir.join(frame_file_name(frame)))
            .with_context(|| format!("writing frame {frame}"))?;
    }
    log::info!("simulated {frames} frames into {}", out_dir.display());
    Ok(())
}

/// `render`: rasterize every frame dump in `sim_dir` through the named
/// camera into PPM images.
pub fn run_render(sim_dir: &Path, camera_id: &str, out_dir: &Path) -> Result<()> {
    let manifest_path = sim_dir.join(MANIFEST_NAME);
    let config = SceneConfig::load(&manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;

    let camera_cfg = config
        .camera(camera_id)
        .with_context(|| format!("camera {camera_id:?} not found in manifest"))?;
    let camera = camera_cfg.build();
    let light = config.lights.first().map(|l| l.build(camera_cfg));

    let env = match &config.env {
        Some(env) => Some(EnvironmentMap::load(&env.map)?),
        None => None,
    };

    // Kernel materials in the exact order the sim dumped transforms.
    let mut materials: Vec<GaussianKernel> = Vec::new();
    for body in &config.bodies {
        if let Some(path) = &body.kernels {
            materials.extend(asset::load_kernels(path)?);
        }
    }

    std::fs::create_dir_all(out_dir)?;
    let opts = config.render.options();
    let fluid_params = config.fluid.as_ref().map(|f| f.params());

    let mut frame_paths: Vec<PathBuf> = std::fs::read_dir(sim_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("frame_") && n.ends_with(".bin"))
                .unwrap_or(false)
        })
        .collect();
    frame_paths.sort();
    anyhow::ensure!(!frame_paths.is_empty(), "no frame dumps in {}", sim_dir.display());

    for path in &frame_paths {
        let dump = FrameDump::read(path)?;
        anyhow::ensure!(
            dump.kernels.len() == materials.len(),
            "frame {} carries {} kernel transforms but assets define {}",
            dump.frame_index,
            dump.kernels.len(),
            materials.len()
        );

        let solid_kernels: Vec<GaussianKernel> = materials
            .iter()
            .zip(&dump.kernels)
            .map(|(material, t)| GaussianKernel {
                center: t.center,
                rotation: t.rotation,
                scaling: t.scaling,
                normal: t.normal,
                ..material.clone()
            })
            .collect();

        let fluid_positions: Vec<Vec3> = dump
            .particles
            .iter()
            .filter(|p| p.kind == FLUID_KIND)
            .map(|p| p.position)
            .collect();
        let fluid_surface: Vec<bool> = dump
            .particles
            .iter()
            .filter(|p| p.kind == FLUID_KIND)
            .map(|p| p.surface)
            .collect();
        let fluid_view = fluid_params.as_ref().map(|p| FluidView {
            positions: &fluid_positions,
            surface_flags: &fluid_surface,
            particle_radius: p.particle_radius,
            kernel_radius: p.kernel_radius,
            mass_over_rest_density: p.mass_over_rest_density(),
        });

        let foam: Vec<FoamParticle> = dump
            .foam
            .iter()
            .map(|f| f.to_particle())
            .collect::<Result<_, _>>()?;

        let view = SceneView {
            solid_kernels: &solid_kernels,
            fluid: fluid_view,
            foam: &foam,
            env: env.as_ref(),
            light: light.as_ref(),
        };
        let buffers = render_frame(&view, &camera, &opts);
        let image = splat_render::ImageRgb {
            width: buffers.width,
            height: buffers.height,
            data: buffers.color,
        };
        let out_path = out_dir.join(format!("frame_{:05}.ppm", dump.frame_index));
        write_ppm(&out_path, &image, true)?;
    }
    log::info!(
        "rendered {} frames from {} into {}",
        frame_paths.len(),
        sim_dir.display(),
        out_dir.display()
    );
    Ok(())
}

/// `metrics`: print the anisotropy metric of a kernel asset.
pub fn run_metrics(asset_path: &Path, a: f64) -> Result<()> {
    let kernels = asset::load_kernels(asset_path)?;
    let metric = anisotropy_metric(&kernels, a)?;
    println!("{metric}");
    Ok(())
}

/// `validate`: run the invariant suite against a scene, printing one line
/// per check. Returns whether everything passed.
pub fn run_validate(scene_path: &Path) -> Result<bool> {
    let mut all_ok = true;
    let mut check = |name: &str, outcome: std::result::Result<String, String>| match outcome {
        Ok(detail) if detail.is_empty() => println!("ok   {name}"),
        Ok(detail) => println!("ok   {name} ({detail})"),
        Err(reason) => {
            println!("FAIL {name}: {reason}");
            all_ok = false;
        }
    };

    let config = match SceneConfig::load(scene_path) {
        Ok(c) => {
            check("config", Ok(String::new()));
            c
        }
        Err(e) => {
            check("config", Err(e.to_string()));
            return Ok(false);
        }
    };

    for (i, body) in config.bodies.iter().enumerate() {
        let name = format!("bodies[{i}] mesh watertight");
        match splat_core::solid::TriangleMesh::load_obj(&body.mesh)
            .map_err(|e| e.to_string())
            .and_then(|m| m.check_watertight().map_err(|e| e.to_string()))
        {
            Ok(()) => check(&name, Ok(String::new())),
            Err(e) => check(&name, Err(e)),
        }
        if let Some(kernels) = &body.kernels {
            let name = format!("bodies[{i}] kernel asset");
            match asset::load_kernels(kernels) {
                Ok(ks) => {
                    let aniso = anisotropy_metric(&ks, config.metrics.aniso_threshold)
                        .map(|m| format!("{} kernels, anisotropy {m:.4}", ks.len()))
                        .unwrap_or_default();
                    check(&name, Ok(aniso));
                }
                Err(e) => check(&name, Err(e.to_string())),
            }
        }
    }

    if let Some(fluid) = &config.fluid {
        let params = fluid.params();
        let kernel = params.kernel();
        // Midpoint quadrature of the kernel over its support.
        let n = 48;
        let r = params.kernel_radius;
        let h = 2.0 * r / n as f64;
        let mut total = 0.0;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let p = Vec3::new(
                        -r + (ix as f64 + 0.5) * h,
                        -r + (iy as f64 + 0.5) * h,
                        -r + (iz as f64 + 0.5) * h,
                    );
                    total += kernel.value_unchecked(p);
                }
            }
        }
        total *= h * h * h;
        if (total - 1.0).abs() < 1e-2 {
            check("fluid kernel normalization", Ok(format!("integral {total:.5}")));
        } else {
            check("fluid kernel normalization", Err(format!("integral {total:.5}")));
        }
    }

    match build_scene(&config) {
        Ok(mut built) => {
            check("scene build", Ok(format!("{} particles", built.scene.particles.len())));
            for (i, body) in built.bodies.iter().enumerate() {
                if body.bindings.is_empty() {
                    continue;
                }
                let worst = body
                    .bindings
                    .iter()
                    .map(|b| (b.weight_sum() - 1.0).abs())
                    .fold(0.0f64, f64::max);
                let fallbacks = body.bindings.iter().filter(|b| b.shepard_fallback).count();
                let name = format!("bodies[{i}] interpolation partition of unity");
                if worst < 1e-10 {
                    check(&name, Ok(format!("max deviation {worst:.2e}, {fallbacks} fallbacks")));
                } else {
                    check(&name, Err(format!("max deviation {worst:.2e}")));
                }
            }
            match built.scene.step() {
                Ok(stats) => check(
                    "one solver step",
                    Ok(format!(
                        "{} projections, {} degenerate",
                        stats.projected, stats.degenerate_projections
                    )),
                ),
                Err(e) => check("one solver step", Err(e.to_string())),
            }
            if let Some(fluid_cfg) = &config.fluid {
                let params = fluid_cfg.params();
                let positions = built.scene.positions();
                let residual = fluid::mean_density_residual(
                    &positions,
                    built.scene.fluid_indices(),
                    &params,
                );
                check("fluid density residual after one step", Ok(format!("{residual:.5}")));
            }
        }
        Err(e) => check("scene build", Err(e.to_string())),
    }

    Ok(all_ok)
}
