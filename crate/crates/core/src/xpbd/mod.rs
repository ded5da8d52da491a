//! Constraint-projection dynamics: position prediction, compliant
//! constraint projection over colored groups, velocity update.

mod constraint;
mod solver;

pub use constraint::{area_eval, density_eval, Constraint, ConstraintEval, ConstraintKind};
pub use solver::{
    color_constraints, predict_positions, project_constraint, GroupedConstraints, ProjectStats,
    Projection, ProjectionOutcome,
};

use crate::math::Vec3;

/// Simulation mass point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Inverse mass; `0` encodes a pinned particle.
    pub inverse_mass: f64,
    pub phase: Phase,
    pub rest_position: Vec3,
}

impl Particle {
    pub fn new(position: Vec3, inverse_mass: f64, phase: Phase) -> Self {
        Particle {
            position,
            velocity: Vec3::ZERO,
            inverse_mass,
            phase,
            rest_position: position,
        }
    }

    pub fn is_pinned(&self) -> bool {
        self.inverse_mass == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Fluid,
    Solid(BodyId),
}

impl Phase {
    pub fn is_fluid(self) -> bool {
        matches!(self, Phase::Fluid)
    }
}

/// Index of a solid body within a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BodyId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub dt: f64,
    pub fluid_iterations: usize,
    pub solid_iterations: usize,
    pub gravity: Vec3,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            dt: 0.005,
            fluid_iterations: 10,
            solid_iterations: 50,
            gravity: Vec3::new(0.0, -9.8, 0.0),
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(format!("dt must be positive, got {}", self.dt));
        }
        if self.fluid_iterations == 0 || self.solid_iterations == 0 {
            return Err("iteration counts must be at least 1".into());
        }
        if !self.gravity.is_finite() {
            return Err("gravity must be finite".into());
        }
        Ok(())
    }
}
