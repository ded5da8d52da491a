//! Mass-weighted best-fit rigid transform of a particle cluster.

use crate::math::{Mat3, Quat, Vec3};

/// Best-fit proper rotation and translation mapping `rest` onto `current`
/// in the mass-weighted least-squares sense; returns the goal positions
/// `R (x0 - c0) + c` plus the rotation for caching.
///
/// Degenerate covariance falls back to `previous_rotation`.
pub fn shape_match_project(
    current: &[Vec3],
    rest: &[Vec3],
    masses: &[f64],
    previous_rotation: Quat,
) -> (Vec<Vec3>, Quat) {
    assert_eq!(current.len(), rest.len());
    assert_eq!(current.len(), masses.len());
    let total: f64 = masses.iter().sum();
    assert!(total > 0.0, "cluster must carry mass");

    let mut c = Vec3::ZERO;
    let mut c0 = Vec3::ZERO;
    for ((&p, &p0), &m) in current.iter().zip(rest).zip(masses) {
        c += p * m;
        c0 += p0 * m;
    }
    c = c / total;
    c0 = c0 / total;

    let mut apq = Mat3::ZERO;
    for ((&p, &p0), &m) in current.iter().zip(rest).zip(masses) {
        apq += (p - c).outer(p0 - c0) * m;
    }

    let scale = apq.m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let rotation = if scale < 1e-12 {
        previous_rotation
    } else {
        apq.polar_rotation(Some(previous_rotation))
    };

    let r = rotation.to_mat3();
    let goals = rest.iter().map(|&p0| r * (p0 - c0) + c).collect();
    (goals, rotation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn translation_is_reproduced_exactly() {
        let rest = tetra();
        let t = Vec3::new(0.4, -1.2, 3.0);
        let current: Vec<Vec3> = rest.iter().map(|&p| p + t).collect();
        let masses = vec![1.0; 4];
        let (goals, _) = shape_match_project(&current, &rest, &masses, Quat::IDENTITY);
        for (g, p) in goals.iter().zip(&current) {
            assert!((*g - *p).norm() < 1e-12);
        }
    }

    #[test]
    fn ninety_degree_rotation_is_recovered() {
        let rest = tetra();
        let rot = Quat::from_axis_angle(Vec3::Z, std::f64::consts::FRAC_PI_2);
        let current: Vec<Vec3> = rest.iter().map(|&p| rot.rotate(p)).collect();
        let masses = vec![1.0; 4];
        let (goals, r) = shape_match_project(&current, &rest, &masses, Quat::IDENTITY);
        for (g, p) in goals.iter().zip(&current) {
            assert!((*g - *p).norm() < 1e-8, "goal {g:?} expected {p:?}");
        }
        assert!((r.to_mat3().determinant() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mirrored_cluster_yields_proper_rotation() {
        let rest = tetra();
        let current: Vec<Vec3> = rest
            .iter()
            .map(|&p| Vec3::new(-p.x, p.y, p.z))
            .collect();
        let masses = vec![1.0; 4];
        let (goals, r) = shape_match_project(&current, &rest, &masses, Quat::IDENTITY);
        assert!((r.to_mat3().determinant() - 1.0).abs() < 1e-6);
        // A reflection cannot be represented, so goals must differ.
        let max_err = goals
            .iter()
            .zip(&current)
            .map(|(g, p)| (*g - *p).norm())
            .fold(0.0f64, f64::max);
        assert!(max_err > 1e-3);
    }

    #[test]
    fn centroid_is_conserved_by_projection() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rest = tetra();
        let masses: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..2.0)).collect();
        let current: Vec<Vec3> = rest
            .iter()
            .map(|&p| p + Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 0.3)
            .collect();
        let (goals, _) = shape_match_project(&current, &rest, &masses, Quat::IDENTITY);
        let total: f64 = masses.iter().sum();
        let before = current
            .iter()
            .zip(&masses)
            .fold(Vec3::ZERO, |a, (&p, &m)| a + p * m)
            / total;
        let after = goals
            .iter()
            .zip(&masses)
            .fold(Vec3::ZERO, |a, (&p, &m)| a + p * m)
            / total;
        assert!((before - after).norm() < 1e-10);
    }

    #[test]
    fn degenerate_cluster_reuses_previous_rotation() {
        // All particles coincident: covariance vanishes.
        let rest = vec![Vec3::ZERO; 3];
        let current = vec![Vec3::new(1.0, 2.0, 3.0); 3];
        let prev = Quat::from_axis_angle(Vec3::Y, 0.8);
        let (_, r) = shape_match_project(&current, &rest, &[1.0; 3], prev);
        assert_eq!(r, prev);
    }
}
