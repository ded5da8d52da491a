//! Position-based fluids: neighbor search, density constraints, surface
//! detection, local triangulation, and surface-tension constraints.

pub mod delaunay;
mod neighbors;
mod surface;
mod tension;

pub use neighbors::{find_neighbors, NeighborGrid};
pub use surface::{detect_surface, surface_normal, SurfaceInfo, SCREEN_CELLS, SCREEN_COLS, SCREEN_ROWS};
pub use tension::{fan_participants, triangulate_local_surface};

use rayon::prelude::*;

use crate::math::{SphKernel, Vec3};
use crate::xpbd::{Constraint, ConstraintKind, Phase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    /// Target density (mass / length^3).
    pub rest_density: f64,
    /// SPH support radius.
    pub kernel_radius: f64,
    pub particle_mass: f64,
    /// Physical particle radius, used for occlusion and rendering.
    pub particle_radius: f64,
    /// Distance threshold below which surface particles are pushed apart.
    pub tension_distance: f64,
    /// Masked-screen fraction below which a particle counts as surface.
    pub occlusion_threshold: f64,
    /// Surface set refresh period in steps.
    pub surface_update_stride: usize,
    /// Compliance of the surface-area tension constraints.
    pub tension_compliance: f64,
    /// Compliance of the pairwise push-apart constraints.
    pub spacing_compliance: f64,
    /// Use the occlusion half-angle exactly as printed in the source
    /// material, `atan(R / (d^2 - R^2))`, which mixes units; the default
    /// is the geometric form `atan(R / sqrt(d^2 - R^2))`.
    pub printed_occlusion_angle: bool,
    /// Project the density constraint only against compression (C > 0).
    pub one_sided_density: bool,
    /// Per-step blend of each fluid particle's velocity toward the
    /// kernel-weighted neighborhood velocity (0 disables). Tames the
    /// surface churn the tension constraints would otherwise excite.
    pub velocity_smoothing: f64,
}

impl FluidParams {
    /// Derive consistent parameters from a lattice spacing: mass balances
    /// the rest density on the initial lattice, the kernel covers two
    /// neighbor shells, and the particle radius overlaps enough that a
    /// liquid-disordered first shell occludes an interior particle's screen.
    pub fn from_spacing(rest_density: f64, spacing: f64) -> Self {
        FluidParams {
            rest_density,
            kernel_radius: 2.0 * spacing,
            particle_mass: rest_density * spacing.powi(3),
            particle_radius: 0.7 * spacing,
            tension_distance: 0.9 * spacing,
            occlusion_threshold: 0.8,
            surface_update_stride: 2,
            tension_compliance: 1e-4,
            spacing_compliance: 0.0,
            printed_occlusion_angle: false,
            one_sided_density: true,
            velocity_smoothing: 0.35,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("rest_density", self.rest_density),
            ("kernel_radius", self.kernel_radius),
            ("particle_mass", self.particle_mass),
            ("particle_radius", self.particle_radius),
            ("tension_distance", self.tension_distance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.particle_radius >= self.kernel_radius {
            return Err("particle_radius must be below kernel_radius".into());
        }
        if self.tension_distance > self.kernel_radius {
            return Err("tension_distance must not exceed kernel_radius".into());
        }
        if !(self.occlusion_threshold > 0.0 && self.occlusion_threshold < 1.0) {
            return Err(format!(
                "occlusion_threshold must lie in (0, 1), got {}",
                self.occlusion_threshold
            ));
        }
        if self.surface_update_stride == 0 {
            return Err("surface_update_stride must be at least 1".into());
        }
        if !(self.tension_compliance.is_finite() && self.tension_compliance >= 0.0) {
            return Err("tension_compliance must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.velocity_smoothing) {
            return Err(format!(
                "velocity_smoothing must lie in [0, 1], got {}",
                self.velocity_smoothing
            ));
        }
        Ok(())
    }

    pub fn kernel(&self) -> SphKernel {
        SphKernel::new(self.kernel_radius).expect("validated radius")
    }

    pub fn mass_over_rest_density(&self) -> f64 {
        self.particle_mass / self.rest_density
    }
}

/// Density constraint of particle `i`: value and gradients for `i` and each
/// neighbor, self term included.
pub fn density_constraint(
    i: u32,
    positions: &[Vec3],
    neighbors: &[u32],
    params: &FluidParams,
) -> crate::xpbd::ConstraintEval {
    let kernel = params.kernel();
    crate::xpbd::density_eval(i, neighbors, params.mass_over_rest_density(), &kernel, positions)
}

/// Tension distance constraint `C = min(0, |p_i - p_j| - d0)` with unit
/// gradients on the active branch.
pub fn tension_distance_constraint(
    i: u32,
    j: u32,
    d0: f64,
    positions: &[Vec3],
) -> (f64, [(u32, Vec3); 2]) {
    let delta = positions[i as usize] - positions[j as usize];
    let d = delta.norm();
    let c = (d - d0).min(0.0);
    if d >= d0 {
        return (c, [(i, Vec3::ZERO), (j, Vec3::ZERO)]);
    }
    let dir = delta.normalized(1e-12).unwrap_or_else(|| {
        log::warn!("coincident tension pair {i}/{j}; using +x fallback");
        Vec3::X
    });
    (c, [(i, dir), (j, -dir)])
}

/// Mutable fluid bookkeeping carried across steps: the cached surface set
/// and normals, refreshed every `surface_update_stride` steps.
#[derive(Debug, Clone)]
pub struct FluidSystem {
    pub params: FluidParams,
    /// Parallel to the scene's fluid index list.
    pub surface: Vec<bool>,
    pub normals: Vec<Option<Vec3>>,
    last_update: Option<u64>,
}

impl FluidSystem {
    pub fn new(params: FluidParams) -> Self {
        FluidSystem {
            params,
            surface: Vec::new(),
            normals: Vec::new(),
            last_update: None,
        }
    }

    pub fn surface_is_current_for(&self, n_fluid: usize) -> bool {
        self.last_update.is_some() && self.surface.len() == n_fluid
    }

    /// Assemble the per-step fluid constraint set: one density constraint
    /// per particle, plus area and distance tension constraints over the
    /// (possibly cached) surface set.
    ///
    /// `fluid_indices` are global particle ids; `neighbor_lists` is indexed
    /// by global id and may include non-fluid particles and neighbors past
    /// the kernel radius (both are filtered here).
    pub fn build_constraints(
        &mut self,
        positions: &[Vec3],
        phases: &[Phase],
        fluid_indices: &[u32],
        neighbor_lists: &[Vec<u32>],
        step_index: u64,
    ) -> Vec<Constraint> {
        let params = self.params;
        let kernel = params.kernel();
        let r2 = params.kernel_radius * params.kernel_radius;

        // Fluid-only neighbor lists within the kernel radius, in slot order.
        let fluid_lists: Vec<Vec<u32>> = fluid_indices
            .par_iter()
            .map(|&g| {
                neighbor_lists[g as usize]
                    .iter()
                    .copied()
                    .filter(|&j| {
                        phases[j as usize].is_fluid()
                            && (positions[j as usize] - positions[g as usize]).norm_squared() <= r2
                    })
                    .collect()
            })
            .collect();

        let refresh = match self.last_update {
            _ if self.surface.len() != fluid_indices.len() => true,
            None => true,
            Some(_) => step_index % params.surface_update_stride as u64 == 0,
        };
        if refresh {
            let flags_normals: Vec<(bool, Option<Vec3>)> = fluid_indices
                .par_iter()
                .zip(fluid_lists.par_iter())
                .map(|(&g, list)| {
                    let info = detect_surface(g, positions, list, &params);
                    let normal = if info.is_surface {
                        surface_normal(g, positions, list, &kernel, params.mass_over_rest_density())
                    } else {
                        None
                    };
                    (info.is_surface, normal)
                })
                .collect();
            self.surface = flags_normals.iter().map(|(s, _)| *s).collect();
            self.normals = flags_normals.into_iter().map(|(_, n)| n).collect();
            self.last_update = Some(step_index);
        }

        // Slot lookup for surface flags of neighbor ids.
        let mut slot_of = vec![u32::MAX; positions.len()];
        for (slot, &g) in fluid_indices.iter().enumerate() {
            slot_of[g as usize] = slot as u32;
        }

        let correction_limit = 0.5 * params.particle_radius;
        let mut constraints = Vec::with_capacity(fluid_indices.len() * 2);
        for (slot, &g) in fluid_indices.iter().enumerate() {
            constraints.push(Constraint::new(
                ConstraintKind::Density {
                    i: g,
                    neighbors: fluid_lists[slot].clone(),
                    mass_over_rest_density: params.mass_over_rest_density(),
                    kernel,
                    one_sided: params.one_sided_density,
                },
                0.0,
            ));
        }

        // Push-apart constraints for every close fluid pair keep the
        // distribution uniform (the density equality alone tolerates
        // clumps).
        let d0 = params.tension_distance;
        for (slot, &g) in fluid_indices.iter().enumerate() {
            for &j in &fluid_lists[slot] {
                if j <= g {
                    continue; // one constraint per unordered pair
                }
                if (positions[j as usize] - positions[g as usize]).norm() < d0 {
                    constraints.push(
                        Constraint::new(
                            ConstraintKind::Distance { i: g, j, rest: d0, one_sided: true },
                            params.spacing_compliance,
                        )
                        .with_correction_limit(correction_limit),
                    );
                }
            }
        }

        for (slot, &g) in fluid_indices.iter().enumerate() {
            if !self.surface[slot] {
                continue;
            }
            let Some(normal) = self.normals[slot] else {
                continue;
            };
            let surface_neighbors: Vec<(u32, Vec3)> = fluid_lists[slot]
                .iter()
                .filter(|&&j| self.surface[slot_of[j as usize] as usize])
                .map(|&j| (j, positions[j as usize]))
                .collect();

            let fan =
                triangulate_local_surface(g, positions[g as usize], &surface_neighbors, normal);
            if !fan.is_empty() {
                let participants = fan_participants(&fan);
                constraints.push(
                    Constraint::new(
                        ConstraintKind::Area { fan, participants },
                        params.tension_compliance,
                    )
                    .with_correction_limit(correction_limit),
                );
            }
        }

        constraints
    }
}

/// Mean one-sided density violation `mean(max(C_i, 0))` over the fluid
/// particles; density deficits at the free surface do not count against it.
pub fn mean_density_residual(positions: &[Vec3], fluid_indices: &[u32], params: &FluidParams) -> f64 {
    if fluid_indices.is_empty() {
        return 0.0;
    }
    let grid = NeighborGrid::build(positions, params.kernel_radius);
    let kernel = params.kernel();
    let m_over_rho = params.mass_over_rest_density();
    let fluid_set: std::collections::HashSet<u32> = fluid_indices.iter().copied().collect();
    let total: f64 = fluid_indices
        .par_iter()
        .map(|&i| {
            let p = positions[i as usize];
            let mut c = m_over_rho * kernel.value_unchecked(Vec3::ZERO);
            grid.for_each_within(positions, p, Some(i), params.kernel_radius, |j, _| {
                if fluid_set.contains(&j) {
                    c += m_over_rho * kernel.value_unchecked(p - positions[j as usize]);
                }
            });
            (c - 1.0).max(0.0)
        })
        .sum();
    total / fluid_indices.len() as f64
}

/// Occupied-volume proxy: number of distinct grid cells of size `cell`
/// containing at least one of the listed particles.
pub fn occupied_cells(positions: &[Vec3], indices: &[u32], cell: f64) -> usize {
    let keys: std::collections::HashSet<(i64, i64, i64)> = indices
        .iter()
        .map(|&i| {
            let p = positions[i as usize];
            (
                (p.x / cell).floor() as i64,
                (p.y / cell).floor() as i64,
                (p.z / cell).floor() as i64,
            )
        })
        .collect();
    keys.len()
}

/// Sphericity of a blob: `r_min / r_max` of its surface particles about the
/// centroid of all listed particles. `None` without surface particles.
pub fn sphericity(positions: &[Vec3], fluid_indices: &[u32], surface: &[bool]) -> Option<f64> {
    let n = fluid_indices.len();
    if n == 0 || surface.len() != n {
        return None;
    }
    let centroid = fluid_indices
        .iter()
        .fold(Vec3::ZERO, |a, &i| a + positions[i as usize])
        / n as f64;
    let mut r_min = f64::INFINITY;
    let mut r_max: f64 = 0.0;
    let mut any = false;
    for (slot, &i) in fluid_indices.iter().enumerate() {
        if !surface[slot] {
            continue;
        }
        any = true;
        let r = (positions[i as usize] - centroid).norm();
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    if !any || r_max <= 0.0 {
        return None;
    }
    Some(r_min / r_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn density_of_isolated_particle_is_self_term() {
        let params = FluidParams::from_spacing(1000.0, 0.1);
        let positions = vec![Vec3::ZERO];
        let eval = density_constraint(0, &positions, &[], &params);
        let expected =
            params.particle_mass * 8.0 / (PI * params.kernel_radius.powi(3) * params.rest_density)
                - 1.0;
        assert!((eval.value - expected).abs() < 1e-12);
    }

    #[test]
    fn density_gradients_are_antisymmetric_for_a_pair() {
        let params = FluidParams::from_spacing(1000.0, 0.1);
        let positions = vec![Vec3::ZERO, Vec3::new(0.12, 0.03, -0.05)];
        let eval = density_constraint(0, &positions, &[1], &params);
        let gi = eval.grads.iter().find(|(k, _)| *k == 0).unwrap().1;
        let gj = eval.grads.iter().find(|(k, _)| *k == 1).unwrap().1;
        assert!((gi + gj).norm() < 1e-15);
    }

    #[test]
    fn density_gradient_matches_finite_difference_on_lattice() {
        use rand::{Rng, SeedableRng};
        let spacing = 0.1;
        let params = FluidParams::from_spacing(1000.0, spacing);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut positions = Vec::new();
        let mut center = 0u32;
        for ix in -1i32..=1 {
            for iy in -1i32..=1 {
                for iz in -1i32..=1 {
                    if (ix, iy, iz) == (0, 0, 0) {
                        center = positions.len() as u32;
                    }
                    // Jitter breaks the lattice symmetry so the gradient is
                    // far from zero.
                    let jitter = Vec3::new(
                        rng.gen_range(-0.15..0.15),
                        rng.gen_range(-0.15..0.15),
                        rng.gen_range(-0.15..0.15),
                    ) * spacing;
                    positions.push(
                        Vec3::new(
                            ix as f64 * spacing,
                            iy as f64 * spacing,
                            iz as f64 * spacing,
                        ) + jitter,
                    );
                }
            }
        }
        let neighbors: Vec<u32> = (0..positions.len() as u32).filter(|&j| j != center).collect();
        let eval = density_constraint(center, &positions, &neighbors, &params);
        let grad_center = eval.grads.iter().find(|(k, _)| *k == center).unwrap().1;

        let scale = grad_center.norm();
        assert!(scale > 1.0, "test configuration should have a clear gradient, got {scale}");
        let h = 1e-6 * params.kernel_radius;
        for (axis, analytic) in [(0, grad_center.x), (1, grad_center.y), (2, grad_center.z)] {
            let orig = positions[center as usize];
            let mut up = orig;
            let mut dn = orig;
            match axis {
                0 => {
                    up.x += h;
                    dn.x -= h;
                }
                1 => {
                    up.y += h;
                    dn.y -= h;
                }
                _ => {
                    up.z += h;
                    dn.z -= h;
                }
            }
            positions[center as usize] = up;
            let c_up = density_constraint(center, &positions, &neighbors, &params).value;
            positions[center as usize] = dn;
            let c_dn = density_constraint(center, &positions, &neighbors, &params).value;
            positions[center as usize] = orig;
            let fd = (c_up - c_dn) / (2.0 * h);
            assert!(
                (fd - analytic).abs() <= 1e-4 * scale,
                "axis {axis}: fd {fd} analytic {analytic}"
            );
        }
    }

    #[test]
    fn tension_distance_branches() {
        let d0 = 0.1;
        let positions = vec![Vec3::ZERO, Vec3::new(0.15, 0.0, 0.0)];
        let (c, grads) = tension_distance_constraint(0, 1, d0, &positions);
        assert_eq!(c, 0.0);
        assert_eq!(grads[0].1, Vec3::ZERO);

        let positions = vec![Vec3::ZERO, Vec3::new(0.05, 0.0, 0.0)];
        let (c, grads) = tension_distance_constraint(0, 1, d0, &positions);
        assert!((c + 0.05).abs() < 1e-12);
        assert!((grads[0].1 - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((grads[1].1 - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tension_distance_gradient_matches_finite_difference() {
        let d0 = 0.2;
        let base = Vec3::new(0.03, -0.07, 0.05);
        let mut positions = vec![Vec3::ZERO, base];
        let (_, grads) = tension_distance_constraint(0, 1, d0, &positions);
        let g0 = grads[0].1;
        let h = 1e-8;
        for (axis, analytic) in [(0, g0.x), (1, g0.y), (2, g0.z)] {
            let mut up = Vec3::ZERO;
            let mut dn = Vec3::ZERO;
            match axis {
                0 => {
                    up.x += h;
                    dn.x -= h;
                }
                1 => {
                    up.y += h;
                    dn.y -= h;
                }
                _ => {
                    up.z += h;
                    dn.z -= h;
                }
            }
            positions[0] = up;
            let c_up = tension_distance_constraint(0, 1, d0, &positions).0;
            positions[0] = dn;
            let c_dn = tension_distance_constraint(0, 1, d0, &positions).0;
            positions[0] = Vec3::ZERO;
            let fd = (c_up - c_dn) / (2.0 * h);
            assert!((fd - analytic).abs() < 1e-6, "fd {fd} analytic {analytic}");
        }
    }
}
