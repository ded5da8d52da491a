//! Local surface triangulation feeding the tension area constraints.

use super::delaunay;
use crate::math::Vec3;

/// Project the surface neighbors of particle `i` onto the plane through
/// `p_i` perpendicular to `normal`, Delaunay-triangulate the projections
/// together with the origin, and keep the triangles incident to `i`.
///
/// Fewer than two neighbors, or neighbors that project collinearly, yield
/// an empty fan.
pub fn triangulate_local_surface(
    i: u32,
    p_i: Vec3,
    surface_neighbors: &[(u32, Vec3)],
    normal: Vec3,
) -> Vec<[u32; 3]> {
    if surface_neighbors.len() < 2 {
        return Vec::new();
    }
    let e1 = normal.any_orthonormal();
    let e2 = normal.cross(e1);

    // Point 0 is the particle itself at the plane origin.
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(surface_neighbors.len() + 1);
    points.push([0.0, 0.0]);
    for (_, p) in surface_neighbors {
        let d = *p - p_i;
        points.push([d.dot(e1), d.dot(e2)]);
    }

    let triangles = delaunay::triangulate(&points);
    triangles
        .into_iter()
        .filter(|t| t.contains(&0))
        .map(|t| {
            let map = |v: usize| {
                if v == 0 {
                    i
                } else {
                    surface_neighbors[v - 1].0
                }
            };
            [map(t[0]), map(t[1]), map(t[2])]
        })
        .collect()
}

/// Unique vertices of a fan in first-appearance order; the constraint's
/// gradient slots align with this list.
pub fn fan_participants(fan: &[[u32; 3]]) -> Vec<u32> {
    let mut out = Vec::new();
    for tri in fan {
        for &v in tri {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_neighbors_give_one_triangle() {
        let neighbors = vec![
            (5u32, Vec3::new(1.0, 0.0, 0.0)),
            (9u32, Vec3::new(0.0, 0.0, 1.0)),
        ];
        let fan = triangulate_local_surface(2, Vec3::ZERO, &neighbors, Vec3::Y);
        assert_eq!(fan.len(), 1);
        let t = fan[0];
        assert!(t.contains(&2) && t.contains(&5) && t.contains(&9));
    }

    #[test]
    fn fewer_than_two_neighbors_is_empty() {
        let fan = triangulate_local_surface(
            0,
            Vec3::ZERO,
            &[(1u32, Vec3::new(1.0, 0.0, 0.0))],
            Vec3::Y,
        );
        assert!(fan.is_empty());
    }

    #[test]
    fn collinear_projections_are_empty() {
        // Neighbors differ only along the normal and one tangent: their
        // projections are collinear with the origin.
        let neighbors = vec![
            (1u32, Vec3::new(1.0, 0.2, 0.0)),
            (2u32, Vec3::new(2.0, -0.1, 0.0)),
            (3u32, Vec3::new(-1.0, 0.3, 0.0)),
        ];
        let fan = triangulate_local_surface(0, Vec3::ZERO, &neighbors, Vec3::Y);
        assert!(fan.is_empty());
    }

    #[test]
    fn quad_around_center_gives_incident_fan() {
        let neighbors = vec![
            (1u32, Vec3::new(1.0, 0.0, 0.1)),
            (2u32, Vec3::new(-0.9, 0.0, 0.2)),
            (3u32, Vec3::new(0.1, 0.0, 1.1)),
            (4u32, Vec3::new(0.0, 0.0, -1.0)),
        ];
        let fan = triangulate_local_surface(0, Vec3::ZERO, &neighbors, Vec3::Y);
        assert!(!fan.is_empty());
        for t in &fan {
            assert!(t.contains(&0));
        }
        let parts = fan_participants(&fan);
        assert!(parts.contains(&0));
        assert!(parts.len() <= 5);
    }
}
