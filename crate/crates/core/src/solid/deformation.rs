//! Per-particle deformation gradients from a weighted least-squares fit of
//! the neighborhood motion.

use crate::math::{Mat3, SphKernel, Vec3};

/// `F = (sum w dx dx0^T)(sum w dx0 dx0^T)^-1` with kernel weights evaluated
/// on the rest offsets; singular values clamped to `[0.05, 20]` so the
/// result stays invertible with `det F > 0`.
///
/// Falls back to the identity (with a warning) when the rest moment matrix
/// is singular, e.g. coplanar neighborhoods.
pub fn compute_deformation_gradient(
    particle: u32,
    positions: &[Vec3],
    rest_positions: &[Vec3],
    neighbors: &[u32],
    kernel: &SphKernel,
) -> Mat3 {
    let pi = positions[particle as usize];
    let pi0 = rest_positions[particle as usize];

    let mut moment_cur = Mat3::ZERO; // sum w dx dx0^T
    let mut moment_rest = Mat3::ZERO; // sum w dx0 dx0^T
    for &j in neighbors {
        let dx0 = rest_positions[j as usize] - pi0;
        let w = kernel.value_unchecked(dx0);
        if w <= 0.0 {
            continue;
        }
        let dx = positions[j as usize] - pi;
        moment_cur += dx.outer(dx0) * w;
        moment_rest += dx0.outer(dx0) * w;
    }

    let Some(inv_rest) = moment_rest.inverse() else {
        log::warn!("singular rest moment matrix at particle {particle}; using identity F");
        return Mat3::IDENTITY;
    };
    clamp_singular_values(moment_cur * inv_rest, 0.05, 20.0)
}

/// Clamp the singular values of `f` into `[lo, hi]` via polar rotation plus
/// a symmetric eigen-decomposition of the stretch.
pub fn clamp_singular_values(f: Mat3, lo: f64, hi: f64) -> Mat3 {
    let rotation = f.polar_rotation(None).to_mat3();
    let stretch = rotation.transpose() * f;
    let (vals, vecs) = stretch.symmetric_eigen();
    let clamped = Vec3::new(
        vals.x.clamp(lo, hi),
        vals.y.clamp(lo, hi),
        vals.z.clamp(lo, hi),
    );
    if (clamped - vals).norm() == 0.0 {
        return f;
    }
    rotation * (vecs * Mat3::from_diagonal(clamped) * vecs.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Quat;

    fn cloud() -> (Vec<Vec3>, Vec<u32>, SphKernel) {
        // A 3x3x3 rest lattice around the center particle.
        let spacing = 0.1;
        let mut rest = Vec::new();
        for ix in -1i32..=1 {
            for iy in -1i32..=1 {
                for iz in -1i32..=1 {
                    rest.push(Vec3::new(
                        ix as f64 * spacing,
                        iy as f64 * spacing,
                        iz as f64 * spacing,
                    ));
                }
            }
        }
        let center = 13u32;
        let neighbors: Vec<u32> = (0..27).filter(|&j| j != center).collect();
        let kernel = SphKernel::new(3.0 * spacing).unwrap();
        (rest, neighbors, kernel)
    }

    #[test]
    fn translation_gives_identity() {
        let (rest, neighbors, kernel) = cloud();
        let t = Vec3::new(0.5, -0.7, 0.2);
        let current: Vec<Vec3> = rest.iter().map(|&p| p + t).collect();
        let f = compute_deformation_gradient(13, &current, &rest, &neighbors, &kernel);
        let err: f64 = (f - Mat3::IDENTITY).m.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-10, "F deviates from identity by {err}");
    }

    #[test]
    fn uniform_scale_is_exact() {
        let (rest, neighbors, kernel) = cloud();
        let current: Vec<Vec3> = rest.iter().map(|&p| p * 1.5).collect();
        let f = compute_deformation_gradient(13, &current, &rest, &neighbors, &kernel);
        let err: f64 = (f - Mat3::IDENTITY * 1.5).m.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-8, "F deviates from 1.5 I by {err}");
    }

    #[test]
    fn rotation_is_exact() {
        let (rest, neighbors, kernel) = cloud();
        let q = Quat::from_axis_angle(Vec3::new(1.0, 1.0, 0.0).normalized(0.0).unwrap(), 0.9);
        let r = q.to_mat3();
        let current: Vec<Vec3> = rest.iter().map(|&p| r * p).collect();
        let f = compute_deformation_gradient(13, &current, &rest, &neighbors, &kernel);
        let err: f64 = (f - r).m.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-8, "F deviates from R by {err}");
    }

    #[test]
    fn coplanar_rest_neighborhood_falls_back_to_identity() {
        let spacing = 0.1;
        let mut rest = vec![Vec3::ZERO];
        for ix in -1i32..=1 {
            for iz in -1i32..=1 {
                if ix == 0 && iz == 0 {
                    continue;
                }
                rest.push(Vec3::new(ix as f64 * spacing, 0.0, iz as f64 * spacing));
            }
        }
        let neighbors: Vec<u32> = (1..rest.len() as u32).collect();
        let kernel = SphKernel::new(3.0 * spacing).unwrap();
        let current = rest.clone();
        let f = compute_deformation_gradient(0, &current, &rest, &neighbors, &kernel);
        assert_eq!(f, Mat3::IDENTITY);
    }

    #[test]
    fn extreme_compression_is_clamped() {
        let (rest, neighbors, kernel) = cloud();
        let current: Vec<Vec3> = rest
            .iter()
            .map(|&p| Vec3::new(p.x * 1e-4, p.y, p.z))
            .collect();
        let f = compute_deformation_gradient(13, &current, &rest, &neighbors, &kernel);
        assert!(f.determinant() > 0.0);
        let (vals, _) = (f.transpose() * f).symmetric_eigen();
        assert!(vals.z.sqrt() >= 0.05 - 1e-9);
    }
}
