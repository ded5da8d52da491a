use rayon::prelude::*;

use super::{Constraint, ConstraintKind, Particle};
use crate::math::{Mat3, Vec3};

/// Predicted positions before constraint projection:
/// `x~ = x + dt v + dt^2 a_ext`, with pinned particles (`w = 0`) ignoring
/// the external acceleration entirely.
pub fn predict_positions(particles: &[Particle], dt: f64, external_accel: Vec3) -> Vec<Vec3> {
    particles
        .iter()
        .map(|p| {
            let mut x = p.position + p.velocity * dt;
            if p.inverse_mass > 0.0 {
                x += external_accel * (dt * dt);
            }
            x
        })
        .collect()
}

/// Position corrections produced by a single constraint projection.
#[derive(Debug, Clone, Default)]
pub struct Projection {
    pub delta_lambda: f64,
    pub corrections: Vec<(u32, Vec3)>,
}

#[derive(Debug, Clone)]
pub enum ProjectionOutcome {
    Applied(Projection),
    /// One-sided constraint currently satisfied; nothing to do.
    Inactive,
    /// Zero denominator (all participants pinned and zero compliance).
    Degenerate,
}

/// Project one constraint against `positions`:
/// `dl = (-dt^2 C - alpha lambda) / (dt^2 grad C M^-1 grad C^T + alpha)`,
/// `dx_k = w_k grad_k C dl`. Accumulates the multiplier on success.
pub fn project_constraint(
    constraint: &mut Constraint,
    positions: &[Vec3],
    inv_mass: &[f64],
    dt: f64,
) -> ProjectionOutcome {
    if let ConstraintKind::ShapeMatch { .. } = constraint.kind {
        return project_shape_match(constraint, positions, inv_mass, dt);
    }

    let eval = match constraint.kind.evaluate(positions) {
        Some(eval) => eval,
        None => return ProjectionOutcome::Inactive,
    };

    let dt2 = dt * dt;
    let alpha = constraint.compliance;
    let mut weighted_grad_sq = 0.0;
    for &(idx, g) in &eval.grads {
        weighted_grad_sq += inv_mass[idx as usize] * g.norm_squared();
    }
    let denom = dt2 * weighted_grad_sq + alpha;
    if denom <= f64::MIN_POSITIVE {
        return if eval.value == 0.0 {
            ProjectionOutcome::Inactive
        } else {
            ProjectionOutcome::Degenerate
        };
    }

    let mut delta_lambda = (-dt2 * eval.value - alpha * constraint.lambda) / denom;

    // Trust region: scale the whole projection down if any participant
    // would move farther than the constraint's correction limit.
    if constraint.correction_limit.is_finite() {
        let largest = eval
            .grads
            .iter()
            .map(|&(idx, g)| (g * (inv_mass[idx as usize] * delta_lambda)).norm())
            .fold(0.0f64, f64::max);
        if largest > constraint.correction_limit {
            delta_lambda *= constraint.correction_limit / largest;
        }
    }
    constraint.lambda += delta_lambda;

    let corrections = eval
        .grads
        .iter()
        .filter(|(idx, _)| inv_mass[*idx as usize] > 0.0)
        .map(|&(idx, g)| (idx, g * (inv_mass[idx as usize] * delta_lambda)))
        .collect();
    ProjectionOutcome::Applied(Projection { delta_lambda, corrections })
}

/// Shape matching: move cluster particles toward the mass-weighted best-fit
/// rigid transform of their rest shape. Compliance blends the correction as
/// `dt^2 / (dt^2 + alpha)` so `alpha = 0` snaps to the goal.
fn project_shape_match(
    constraint: &mut Constraint,
    positions: &[Vec3],
    inv_mass: &[f64],
    dt: f64,
) -> ProjectionOutcome {
    let ConstraintKind::ShapeMatch {
        participants,
        rest_offsets,
        cached_rotation,
    } = &mut constraint.kind
    else {
        unreachable!("guarded by caller");
    };

    // Pinned particles enter the fit with a large finite mass so clusters
    // attached to them rotate about the pins.
    const PINNED_MASS: f64 = 1e12;
    let mass_of = |idx: u32| {
        let w = inv_mass[idx as usize];
        if w > 0.0 {
            1.0 / w
        } else {
            PINNED_MASS
        }
    };

    let mut total_mass = 0.0;
    let mut centroid = Vec3::ZERO;
    for &idx in participants.iter() {
        let m = mass_of(idx);
        total_mass += m;
        centroid += positions[idx as usize] * m;
    }
    if total_mass <= 0.0 {
        return ProjectionOutcome::Degenerate;
    }
    centroid = centroid / total_mass;

    let mut apq = Mat3::ZERO;
    for (&idx, &rest) in participants.iter().zip(rest_offsets.iter()) {
        let m = mass_of(idx);
        apq += (positions[idx as usize] - centroid).outer(rest) * m;
    }

    // Degenerate moment matrix: keep the previous rotation.
    let rotation = if apq.determinant().abs() <= 1e-18 && apq.m.iter().all(|v| v.abs() < 1e-9) {
        *cached_rotation
    } else {
        apq.polar_rotation(Some(*cached_rotation))
    };
    *cached_rotation = rotation;
    let r = rotation.to_mat3();

    let dt2 = dt * dt;
    let stiffness = dt2 / (dt2 + constraint.compliance);
    let corrections = participants
        .iter()
        .zip(rest_offsets.iter())
        .filter(|(&idx, _)| inv_mass[idx as usize] > 0.0)
        .map(|(&idx, &rest)| {
            let goal = r * rest + centroid;
            (idx, (goal - positions[idx as usize]) * stiffness)
        })
        .collect();
    ProjectionOutcome::Applied(Projection { delta_lambda: 0.0, corrections })
}

/// Greedy first-fit coloring: partitions constraints into ordered groups in
/// which no two constraints share a participant.
pub fn color_constraints(constraints: &[Constraint], n_particles: usize) -> Vec<Vec<usize>> {
    let words = n_particles.div_ceil(64);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut used: Vec<Vec<u64>> = Vec::new();
    let mut scratch: Vec<u32> = Vec::new();

    for (ci, constraint) in constraints.iter().enumerate() {
        scratch.clear();
        constraint.for_each_participant(|p| scratch.push(p));

        let mut placed = false;
        for (gi, mask) in used.iter_mut().enumerate() {
            let conflict = scratch
                .iter()
                .any(|&p| mask[p as usize / 64] >> (p % 64) & 1 == 1);
            if !conflict {
                for &p in &scratch {
                    mask[p as usize / 64] |= 1 << (p % 64);
                }
                groups[gi].push(ci);
                placed = true;
                break;
            }
        }
        if !placed {
            let mut mask = vec![0u64; words];
            for &p in &scratch {
                mask[p as usize / 64] |= 1 << (p % 64);
            }
            used.push(mask);
            groups.push(vec![ci]);
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectStats {
    pub degenerate: usize,
    pub projected: usize,
}

/// Constraints reordered so each color group is a contiguous range,
/// enabling parallel projection with a fixed, deterministic application
/// order inside every group.
#[derive(Debug, Clone, Default)]
pub struct GroupedConstraints {
    constraints: Vec<Constraint>,
    group_ends: Vec<usize>,
}

impl GroupedConstraints {
    pub fn new(constraints: Vec<Constraint>, n_particles: usize) -> Self {
        let groups = color_constraints(&constraints, n_particles);
        let mut order = Vec::with_capacity(constraints.len());
        let mut group_ends = Vec::with_capacity(groups.len());
        for group in &groups {
            order.extend_from_slice(group);
            group_ends.push(order.len());
        }
        let mut slots: Vec<Option<Constraint>> = constraints.into_iter().map(Some).collect();
        let constraints = order
            .into_iter()
            .map(|i| slots[i].take().expect("each constraint placed once"))
            .collect();
        GroupedConstraints { constraints, group_ends }
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn group_count(&self) -> usize {
        self.group_ends.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn reset_multipliers(&mut self) {
        for c in &mut self.constraints {
            c.lambda = 0.0;
        }
    }

    /// One Gauss-Seidel pass over all groups. Within a group corrections are
    /// computed from group-start positions (participants are disjoint, so
    /// evaluation order cannot matter) and applied once, in constraint order.
    pub fn project_pass(
        &mut self,
        positions: &mut [Vec3],
        inv_mass: &[f64],
        dt: f64,
    ) -> ProjectStats {
        let mut stats = ProjectStats::default();
        let mut start = 0;
        for &end in &self.group_ends {
            let group = &mut self.constraints[start..end];
            let outcomes: Vec<ProjectionOutcome> = if group.len() >= 64 {
                group
                    .par_iter_mut()
                    .map(|c| project_constraint(c, positions, inv_mass, dt))
                    .collect()
            } else {
                group
                    .iter_mut()
                    .map(|c| project_constraint(c, positions, inv_mass, dt))
                    .collect()
            };
            for outcome in outcomes {
                match outcome {
                    ProjectionOutcome::Applied(p) => {
                        stats.projected += 1;
                        for (idx, dx) in p.corrections {
                            positions[idx as usize] += dx;
                        }
                    }
                    ProjectionOutcome::Inactive => {}
                    ProjectionOutcome::Degenerate => stats.degenerate += 1,
                }
            }
            start = end;
        }
        stats
    }
}
