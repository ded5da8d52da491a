//! Scene state and the per-step solver loop: predict, project the solid and
//! fluid constraint sets over colored groups with their own iteration
//! counts, then update velocities.

use thiserror::Error;

use crate::fluid::{find_neighbors, FluidParams, FluidSystem};
use crate::math::Vec3;
use crate::solid::{build_solid_constraints, BodySpec};
use crate::xpbd::{
    predict_positions, BodyId, Constraint, ConstraintKind, GroupedConstraints, Particle, Phase,
    ProjectStats, SolverSettings,
};

#[derive(Debug, Error)]
pub enum StepError {
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
    #[error("non-finite position at particle {particle} after projection; step aborted")]
    NonFinitePosition { particle: usize },
}

/// Boundary half-space `normal . x >= offset` (unit normal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec3,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct Body {
    pub id: BodyId,
    pub spec: BodySpec,
    pub pinned: bool,
    /// Contiguous range into the scene particle array.
    pub first_particle: u32,
    pub particle_count: u32,
}

impl Body {
    pub fn particle_indices(&self) -> impl Iterator<Item = u32> {
        self.first_particle..self.first_particle + self.particle_count
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub degenerate_projections: usize,
    pub projected: usize,
    pub contact_count: usize,
}

#[derive(Debug, Default)]
pub struct Scene {
    pub particles: Vec<Particle>,
    pub bodies: Vec<Body>,
    pub fluid: Option<FluidSystem>,
    pub boundaries: Vec<HalfSpace>,
    pub settings: SolverSettings,
    pub step_index: u64,
    /// Per-particle contact radius (fluid particle radius or half of the
    /// body's sample radius).
    contact_radius: Vec<f64>,
    fluid_indices: Vec<u32>,
    solid_static: GroupedConstraints,
    solid_dirty: bool,
}

impl Scene {
    pub fn new(settings: SolverSettings) -> Self {
        Scene { settings, ..Default::default() }
    }

    pub fn fluid_indices(&self) -> &[u32] {
        &self.fluid_indices
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.particles.iter().map(|p| p.position).collect()
    }

    pub fn set_fluid(&mut self, params: FluidParams) {
        self.fluid = Some(FluidSystem::new(params));
    }

    pub fn add_boundary(&mut self, normal: Vec3, offset: f64) {
        let n = normal.normalized(1e-12).expect("boundary normal must be non-zero");
        self.boundaries.push(HalfSpace { normal: n, offset });
    }

    /// Six inward-facing planes of an axis-aligned box.
    pub fn add_box_boundary(&mut self, lo: Vec3, hi: Vec3) {
        self.add_boundary(Vec3::X, lo.x);
        self.add_boundary(-Vec3::X, -hi.x);
        self.add_boundary(Vec3::Y, lo.y);
        self.add_boundary(-Vec3::Y, -hi.y);
        self.add_boundary(Vec3::Z, lo.z);
        self.add_boundary(-Vec3::Z, -hi.z);
    }

    /// Append fluid particles; requires `set_fluid` to have been called.
    pub fn add_fluid_particles(&mut self, positions: &[Vec3], velocity: Vec3) {
        let params = self
            .fluid
            .as_ref()
            .map(|f| f.params)
            .expect("fluid parameters must be set before adding fluid particles");
        let w = 1.0 / params.particle_mass;
        for &p in positions {
            let mut particle = Particle::new(p, w, Phase::Fluid);
            particle.velocity = velocity;
            self.fluid_indices.push(self.particles.len() as u32);
            self.contact_radius.push(params.particle_radius);
            self.particles.push(particle);
        }
    }

    /// Append a solid body from sampled positions; builds its internal
    /// constraints immediately.
    pub fn add_body(
        &mut self,
        sampled: &[Vec3],
        spec: BodySpec,
        mass_per_particle: f64,
        pinned: bool,
    ) -> BodyId {
        let id = BodyId(self.bodies.len() as u32);
        let first = self.particles.len() as u32;
        let w = if pinned { 0.0 } else { 1.0 / mass_per_particle };
        for &p in sampled {
            self.particles.push(Particle::new(p, w, Phase::Solid(id)));
            self.contact_radius.push(0.5 * spec.sample_radius);
        }
        self.bodies.push(Body {
            id,
            spec,
            pinned,
            first_particle: first,
            particle_count: sampled.len() as u32,
        });
        self.solid_dirty = true;
        id
    }

    pub fn body_velocity(&mut self, id: BodyId, velocity: Vec3) {
        let body = &self.bodies[id.0 as usize];
        for i in body.particle_indices() {
            self.particles[i as usize].velocity = velocity;
        }
    }

    /// Spin a body about its centroid (rigid initial condition helper).
    pub fn body_angular_velocity(&mut self, id: BodyId, omega: Vec3) {
        let body = &self.bodies[id.0 as usize];
        let indices: Vec<u32> = body.particle_indices().collect();
        let centroid = indices
            .iter()
            .fold(Vec3::ZERO, |a, &i| a + self.particles[i as usize].position)
            / indices.len() as f64;
        for i in indices {
            let r = self.particles[i as usize].position - centroid;
            self.particles[i as usize].velocity += omega.cross(r);
        }
    }

    fn rebuild_solid_constraints(&mut self) {
        let mut constraints = Vec::new();
        for body in &self.bodies {
            if body.pinned {
                continue; // static scenery needs no internal constraints
            }
            let indices: Vec<u32> = body.particle_indices().collect();
            let rest: Vec<Vec3> = indices
                .iter()
                .map(|&i| self.particles[i as usize].rest_position)
                .collect();
            constraints.extend(build_solid_constraints(&indices, &rest, &body.spec));
        }
        self.solid_static = GroupedConstraints::new(constraints, self.particles.len());
        self.solid_dirty = false;
    }

    /// Per-step boundary and contact constraints, split into the fluid and
    /// solid projection sets.
    fn build_dynamic_constraints(
        &self,
        positions: &[Vec3],
        neighbor_lists: &[Vec<u32>],
    ) -> (Vec<Constraint>, Vec<Constraint>, usize) {
        let mut fluid_set = Vec::new();
        let mut solid_set = Vec::new();
        let mut contacts = 0;

        // Boundary planes, offset by the particle radius, built for
        // particles within one extra radius of the wall.
        for (i, &p) in positions.iter().enumerate() {
            let radius = self.contact_radius[i];
            let is_fluid = self.particles[i].phase.is_fluid();
            for plane in &self.boundaries {
                let gap = p.dot(plane.normal) - plane.offset - radius;
                if gap < radius {
                    let c = Constraint::new(
                        ConstraintKind::Plane {
                            i: i as u32,
                            normal: plane.normal,
                            offset: plane.offset + radius,
                        },
                        0.0,
                    );
                    if is_fluid {
                        fluid_set.push(c);
                    } else {
                        solid_set.push(c);
                    }
                }
            }
        }

        // Pairwise contacts between particles of different phases or
        // different bodies, at rest distance r_i + r_j.
        for (i, list) in neighbor_lists.iter().enumerate() {
            let pi = self.particles[i].phase;
            for &j in list {
                if (j as usize) <= i {
                    continue;
                }
                let pj = self.particles[j as usize].phase;
                match (pi, pj) {
                    (Phase::Fluid, Phase::Fluid) => continue, // density handles these
                    (Phase::Solid(a), Phase::Solid(b)) if a == b => continue,
                    _ => {}
                }
                let rest = self.contact_radius[i] + self.contact_radius[j as usize];
                if (positions[i] - positions[j as usize]).norm() >= rest {
                    continue;
                }
                contacts += 1;
                let c = Constraint::new(
                    ConstraintKind::Distance { i: i as u32, j, rest, one_sided: true },
                    0.0,
                );
                if pi.is_fluid() || pj.is_fluid() {
                    fluid_set.push(c);
                } else {
                    solid_set.push(c);
                }
            }
        }

        (fluid_set, solid_set, contacts)
    }

    /// Largest radius any neighbor query needs this step.
    fn query_radius(&self) -> f64 {
        let mut r: f64 = 0.0;
        if let Some(fluid) = &self.fluid {
            if !self.fluid_indices.is_empty() {
                r = r.max(fluid.params.kernel_radius);
            }
        }
        let max_contact = self.contact_radius.iter().copied().fold(0.0f64, f64::max);
        r.max(2.0 * max_contact)
    }

    /// Advance the scene by one time step.
    pub fn step(&mut self) -> Result<StepStats, StepError> {
        self.settings.validate().map_err(StepError::InvalidSettings)?;
        if self.particles.is_empty() {
            self.step_index += 1;
            return Ok(StepStats::default());
        }
        if self.solid_dirty {
            self.rebuild_solid_constraints();
        }

        let dt = self.settings.dt;
        let mut positions = predict_positions(&self.particles, dt, self.settings.gravity);
        let inv_mass: Vec<f64> = self.particles.iter().map(|p| p.inverse_mass).collect();
        let phases: Vec<Phase> = self.particles.iter().map(|p| p.phase).collect();

        let neighbor_lists = find_neighbors(&positions, self.query_radius());

        let (mut fluid_dyn, mut solid_dyn, contact_count) = {
            let (mut fluid_set, solid_set, contacts) =
                self.build_dynamic_constraints(&positions, &neighbor_lists);
            if let Some(fluid) = &mut self.fluid {
                let mut constraints = fluid.build_constraints(
                    &positions,
                    &phases,
                    &self.fluid_indices,
                    &neighbor_lists,
                    self.step_index,
                );
                constraints.append(&mut fluid_set);
                fluid_set = constraints;
            }
            (
                GroupedConstraints::new(fluid_set, self.particles.len()),
                GroupedConstraints::new(solid_set, self.particles.len()),
                contacts,
            )
        };

        self.solid_static.reset_multipliers();

        let mut stats = StepStats { contact_count, ..Default::default() };
        let tally = |s: ProjectStats, stats: &mut StepStats| {
            stats.degenerate_projections += s.degenerate;
            stats.projected += s.projected;
        };

        let solid_iters = self.settings.solid_iterations;
        let fluid_iters = self.settings.fluid_iterations;
        for it in 0..solid_iters.max(fluid_iters) {
            if it < solid_iters {
                let s = self.solid_static.project_pass(&mut positions, &inv_mass, dt);
                tally(s, &mut stats);
                let s = solid_dyn.project_pass(&mut positions, &inv_mass, dt);
                tally(s, &mut stats);
            }
            if it < fluid_iters {
                let s = fluid_dyn.project_pass(&mut positions, &inv_mass, dt);
                tally(s, &mut stats);
            }
        }

        if let Some(bad) = positions.iter().position(|p| !p.is_finite()) {
            return Err(StepError::NonFinitePosition { particle: bad });
        }

        for (particle, &x_new) in self.particles.iter_mut().zip(&positions) {
            particle.velocity = (x_new - particle.position) * (1.0 / dt);
            particle.position = x_new;
        }
        self.smooth_fluid_velocities(&positions, &neighbor_lists, &phases);
        for body in &self.bodies {
            if body.spec.damping > 0.0 {
                let factor = 1.0 / (1.0 + body.spec.damping * dt);
                for i in body.particle_indices() {
                    let v = self.particles[i as usize].velocity;
                    self.particles[i as usize].velocity = v * factor;
                }
            }
        }
        self.step_index += 1;
        Ok(stats)
    }

    /// Blend each fluid particle's velocity toward the kernel-weighted mean
    /// of its fluid neighborhood (from the old velocities, so the pass is
    /// order-independent).
    fn smooth_fluid_velocities(
        &mut self,
        positions: &[Vec3],
        neighbor_lists: &[Vec<u32>],
        phases: &[Phase],
    ) {
        let Some(fluid) = &self.fluid else { return };
        let c = fluid.params.velocity_smoothing;
        if c <= 0.0 || self.fluid_indices.is_empty() {
            return;
        }
        let kernel = fluid.params.kernel();
        let m_over_rho = fluid.params.mass_over_rest_density();
        let r2 = fluid.params.kernel_radius * fluid.params.kernel_radius;
        let old: Vec<Vec3> = self.particles.iter().map(|p| p.velocity).collect();

        use rayon::prelude::*;
        let inv_mass: Vec<f64> = self.particles.iter().map(|p| p.inverse_mass).collect();
        let blended: Vec<(u32, Vec3)> = self
            .fluid_indices
            .par_iter()
            .filter(|&&g| inv_mass[g as usize] > 0.0)
            .map(|&g| {
                let vi = old[g as usize];
                let mut dv = Vec3::ZERO;
                for &j in &neighbor_lists[g as usize] {
                    if !phases[j as usize].is_fluid() {
                        continue;
                    }
                    let delta = positions[g as usize] - positions[j as usize];
                    if delta.norm_squared() > r2 {
                        continue;
                    }
                    dv += (old[j as usize] - vi)
                        * (m_over_rho * kernel.value_unchecked(delta));
                }
                (g, vi + dv * c)
            })
            .collect();
        for (g, v) in blended {
            self.particles[g as usize].velocity = v;
        }
    }
}
