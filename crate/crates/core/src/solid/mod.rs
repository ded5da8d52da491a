//! Solid bodies: volume discretization, constraint generation, deformation
//! gradients, and motion transfer onto render kernels.

mod deformation;
mod gmls;
pub mod mesh;
mod sampling;
mod shape_match;

pub use deformation::{clamp_singular_values, compute_deformation_gradient};
pub use gmls::{build_bindings, GmlsBinding};
pub use mesh::{box_mesh, MeshError, TriangleMesh};
pub use sampling::{dart_throw_sample_volume, poisson_sample_volume};
pub use shape_match::shape_match_project;

use crate::math::{Quat, Vec3};
use crate::xpbd::{Constraint, ConstraintKind};

pub const DEFAULT_KNN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyMode {
    Rigid,
    Deformable,
}

/// How a body's particles are tied together.
#[derive(Debug, Clone, Copy)]
pub struct BodySpec {
    pub mode: BodyMode,
    /// Compliance of the deformable constraints; ignored for rigid bodies.
    pub compliance: f64,
    /// Poisson sampling radius the particles were generated with.
    pub sample_radius: f64,
    /// Internal damping rate (1/s); scales velocities by 1/(1 + damping dt)
    /// each step. Zero leaves the body undamped.
    pub damping: f64,
}

/// Constraints tying one body's particles together.
///
/// Rigid: a single whole-body shape match. Deformable: distance constraints
/// over the k-nearest-neighbor graph plus one overlapping shape-match
/// cluster per particle (radius twice the sample radius), both at the
/// body's compliance. Bodies with fewer than 4 particles fall back to rigid
/// with a warning.
pub fn build_solid_constraints(
    particle_indices: &[u32],
    rest_positions: &[Vec3],
    spec: &BodySpec,
) -> Vec<Constraint> {
    assert_eq!(particle_indices.len(), rest_positions.len());
    let n = particle_indices.len();
    if n == 0 {
        return Vec::new();
    }

    let mode = if n < 4 && spec.mode == BodyMode::Deformable {
        log::warn!("body with {n} particles cannot be deformable; falling back to rigid");
        BodyMode::Rigid
    } else {
        spec.mode
    };

    match mode {
        BodyMode::Rigid => vec![whole_body_shape_match(particle_indices, rest_positions, 0.0)],
        BodyMode::Deformable => {
            let mut constraints = Vec::new();

            // Distance constraints over the k-NN graph, deduplicated.
            let k = DEFAULT_KNN.min(n - 1);
            let mut edges = std::collections::BTreeSet::new();
            for (a, &p) in rest_positions.iter().enumerate() {
                let mut dists: Vec<(f64, usize)> = rest_positions
                    .iter()
                    .enumerate()
                    .filter(|&(b, _)| b != a)
                    .map(|(b, &q)| ((p - q).norm_squared(), b))
                    .collect();
                dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
                for &(_, b) in dists.iter().take(k) {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            for (a, b) in edges {
                constraints.push(Constraint::new(
                    ConstraintKind::Distance {
                        i: particle_indices[a],
                        j: particle_indices[b],
                        rest: (rest_positions[a] - rest_positions[b]).norm(),
                        one_sided: false,
                    },
                    spec.compliance,
                ));
            }

            // Overlapping shape-match clusters keep the volume coherent.
            let cluster_radius = 2.0 * spec.sample_radius;
            let r2 = cluster_radius * cluster_radius;
            for (a, &p) in rest_positions.iter().enumerate() {
                let members: Vec<usize> = (0..n)
                    .filter(|&b| (rest_positions[b] - p).norm_squared() <= r2)
                    .collect();
                if members.len() < 4 {
                    continue;
                }
                let _ = a;
                let centroid = members
                    .iter()
                    .fold(Vec3::ZERO, |acc, &b| acc + rest_positions[b])
                    / members.len() as f64;
                constraints.push(Constraint::new(
                    ConstraintKind::ShapeMatch {
                        participants: members.iter().map(|&b| particle_indices[b]).collect(),
                        rest_offsets: members
                            .iter()
                            .map(|&b| rest_positions[b] - centroid)
                            .collect(),
                        cached_rotation: Quat::IDENTITY,
                    },
                    spec.compliance,
                ));
            }
            constraints
        }
    }
}

fn whole_body_shape_match(
    particle_indices: &[u32],
    rest_positions: &[Vec3],
    compliance: f64,
) -> Constraint {
    let centroid =
        rest_positions.iter().fold(Vec3::ZERO, |a, &p| a + p) / rest_positions.len() as f64;
    Constraint::new(
        ConstraintKind::ShapeMatch {
            participants: particle_indices.to_vec(),
            rest_offsets: rest_positions.iter().map(|&p| p - centroid).collect(),
            cached_rotation: Quat::IDENTITY,
        },
        compliance,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_body_gets_one_shape_match_over_all_particles() {
        let n = 100;
        let indices: Vec<u32> = (0..n).collect();
        let rest: Vec<Vec3> = (0..n)
            .map(|i| Vec3::new(i as f64 * 0.1, (i % 7) as f64, (i % 3) as f64))
            .collect();
        let spec = BodySpec { mode: BodyMode::Rigid, compliance: 0.0, sample_radius: 0.1, damping: 0.0 };
        let constraints = build_solid_constraints(&indices, &rest, &spec);
        assert_eq!(constraints.len(), 1);
        match &constraints[0].kind {
            ConstraintKind::ShapeMatch { participants, .. } => {
                assert_eq!(participants.len(), 100)
            }
            other => panic!("expected shape match, got {other:?}"),
        }
    }

    #[test]
    fn deformable_chain_of_three_gets_all_pairs_then_falls_back_rigid() {
        // Three collinear particles: below the deformable minimum, so the
        // builder falls back to a single rigid shape match.
        let indices = [0u32, 1, 2];
        let rest = [
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let spec = BodySpec { mode: BodyMode::Deformable, compliance: 1e-6, sample_radius: 1.0, damping: 0.0 };
        let constraints = build_solid_constraints(&indices, &rest, &spec);
        assert_eq!(constraints.len(), 1);
        assert!(matches!(constraints[0].kind, ConstraintKind::ShapeMatch { .. }));
    }

    #[test]
    fn deformable_tetrahedron_gets_all_pair_distances() {
        let indices = [0u32, 1, 2, 3];
        let rest = [
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let spec = BodySpec { mode: BodyMode::Deformable, compliance: 1e-6, sample_radius: 1.0, damping: 0.0 };
        let constraints = build_solid_constraints(&indices, &rest, &spec);
        let distance_count = constraints
            .iter()
            .filter(|c| matches!(c.kind, ConstraintKind::Distance { .. }))
            .count();
        assert_eq!(distance_count, 6); // all pairs of 4 points
        let cluster_count = constraints
            .iter()
            .filter(|c| matches!(c.kind, ConstraintKind::ShapeMatch { .. }))
            .count();
        assert_eq!(cluster_count, 4); // one cluster per particle
    }
}
