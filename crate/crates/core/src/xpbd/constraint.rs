use crate::math::{Quat, SphKernel, Vec3};

/// A typed restriction on particle positions with XPBD compliance and an
/// accumulated Lagrange multiplier (reset at the start of every step).
#[derive(Debug, Clone)]
pub struct Constraint {
    pub kind: ConstraintKind,
    /// Compliance (inverse stiffness); `0` is a hard constraint.
    pub compliance: f64,
    pub lambda: f64,
    /// Per-projection cap on the largest participant correction. When a
    /// projection would exceed it, the multiplier update and every
    /// correction are scaled down together, so the equal-and-opposite
    /// structure (momentum) is untouched. Infinite by default.
    pub correction_limit: f64,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, compliance: f64) -> Self {
        Constraint { kind, compliance, lambda: 0.0, correction_limit: f64::INFINITY }
    }

    pub fn with_correction_limit(mut self, limit: f64) -> Self {
        self.correction_limit = limit;
        self
    }

    pub fn for_each_participant(&self, mut f: impl FnMut(u32)) {
        match &self.kind {
            ConstraintKind::Distance { i, j, .. } => {
                f(*i);
                f(*j);
            }
            ConstraintKind::Plane { i, .. } => f(*i),
            ConstraintKind::Density { i, neighbors, .. } => {
                f(*i);
                for &j in neighbors {
                    f(j);
                }
            }
            ConstraintKind::Area { participants, .. } => {
                for &p in participants {
                    f(p);
                }
            }
            ConstraintKind::ShapeMatch { participants, .. } => {
                for &p in participants {
                    f(p);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ConstraintKind {
    /// Pairwise distance. Bilateral keeps `|p_i - p_j| = rest`; one-sided
    /// only pushes apart when closer than `rest` (contacts, tension).
    Distance {
        i: u32,
        j: u32,
        rest: f64,
        one_sided: bool,
    },
    /// Unilateral half-space: keeps `normal . x >= offset`.
    Plane { i: u32, normal: Vec3, offset: f64 },
    /// Integrated density of particle `i` against its rest density.
    /// One-sided by default: only resists compression (C > 0).
    Density {
        i: u32,
        neighbors: Vec<u32>,
        mass_over_rest_density: f64,
        kernel: SphKernel,
        one_sided: bool,
    },
    /// Summed area of a surface particle's local triangle fan, driven
    /// toward zero (surface tension).
    Area {
        fan: Vec<[u32; 3]>,
        /// Unique vertices of the fan, gradient slots align with these.
        participants: Vec<u32>,
    },
    /// Mass-weighted best-fit rigid transform of a particle cluster.
    /// Projected directly to goal positions rather than through a scalar
    /// constraint value.
    ShapeMatch {
        participants: Vec<u32>,
        /// Rest positions relative to the rest centroid.
        rest_offsets: Vec<Vec3>,
        /// Warm start for rotation extraction; doubles as the fallback when
        /// the moment matrix degenerates.
        cached_rotation: Quat,
    },
}

/// Scalar constraint value and its gradient per participating particle.
#[derive(Debug, Clone, Default)]
pub struct ConstraintEval {
    pub value: f64,
    pub grads: Vec<(u32, Vec3)>,
}

impl ConstraintKind {
    /// Evaluate the scalar constraint and gradients at `positions`.
    ///
    /// Returns `None` for satisfied one-sided constraints (no projection
    /// needed) and for `ShapeMatch`, which does not reduce to a scalar.
    pub fn evaluate(&self, positions: &[Vec3]) -> Option<ConstraintEval> {
        match self {
            ConstraintKind::Distance { i, j, rest, one_sided } => {
                let delta = positions[*i as usize] - positions[*j as usize];
                let d = delta.norm();
                if *one_sided && d >= *rest {
                    return None;
                }
                let dir = match delta.normalized(1e-12) {
                    Some(dir) => dir,
                    None => {
                        log::warn!(
                            "coincident particles {i}/{j} in distance constraint; using +x fallback"
                        );
                        Vec3::X
                    }
                };
                Some(ConstraintEval {
                    value: d - rest,
                    grads: vec![(*i, dir), (*j, -dir)],
                })
            }
            ConstraintKind::Plane { i, normal, offset } => {
                let c = positions[*i as usize].dot(*normal) - offset;
                if c >= 0.0 {
                    return None;
                }
                Some(ConstraintEval {
                    value: c,
                    grads: vec![(*i, *normal)],
                })
            }
            ConstraintKind::Density {
                i,
                neighbors,
                mass_over_rest_density,
                kernel,
                one_sided,
            } => {
                let eval = density_eval(
                    *i,
                    neighbors,
                    *mass_over_rest_density,
                    kernel,
                    positions,
                );
                // One-sided only resists compression; a density deficit is
                // handled by the tension constraints instead.
                if *one_sided && eval.value <= 0.0 {
                    return None;
                }
                Some(eval)
            }
            ConstraintKind::Area { fan, participants } => {
                Some(area_eval(fan, participants, positions))
            }
            ConstraintKind::ShapeMatch { .. } => None,
        }
    }
}

/// `C_i = sum_j (m_j / rho_0) W(p_i - p_j, r) - 1`, self term included;
/// gradients follow the antisymmetry of the kernel gradient.
pub fn density_eval(
    i: u32,
    neighbors: &[u32],
    mass_over_rest_density: f64,
    kernel: &SphKernel,
    positions: &[Vec3],
) -> ConstraintEval {
    let pi = positions[i as usize];
    let mut c = mass_over_rest_density * kernel.value_unchecked(Vec3::ZERO);
    let mut grad_i = Vec3::ZERO;
    let mut grads = Vec::with_capacity(neighbors.len() + 1);
    grads.push((i, Vec3::ZERO)); // slot 0, filled after the loop
    for &j in neighbors {
        let delta = pi - positions[j as usize];
        c += mass_over_rest_density * kernel.value_unchecked(delta);
        let g = kernel.gradient_unchecked(delta) * mass_over_rest_density;
        grad_i += g;
        grads.push((j, -g));
    }
    grads[0].1 = grad_i;
    ConstraintEval { value: c - 1.0, grads }
}

/// `C = sum_t 1/2 |(p_t2 - p_t1) x (p_t3 - p_t1)|` with per-vertex
/// gradients `n x (opposite edge) / (2 |n|)` accumulated over the fan.
/// Degenerate triangles contribute zero gradient.
pub fn area_eval(fan: &[[u32; 3]], participants: &[u32], positions: &[Vec3]) -> ConstraintEval {
    let mut value = 0.0;
    let mut grads: Vec<(u32, Vec3)> = participants.iter().map(|&p| (p, Vec3::ZERO)).collect();
    let slot = |v: u32| participants.iter().position(|&p| p == v).expect("fan vertex listed");
    for tri in fan {
        let [a, b, c] = *tri;
        let pa = positions[a as usize];
        let pb = positions[b as usize];
        let pc = positions[c as usize];
        let n = (pb - pa).cross(pc - pa);
        let norm = n.norm();
        value += 0.5 * norm;
        if norm < 1e-12 {
            continue;
        }
        let inv = 1.0 / (2.0 * norm);
        grads[slot(a)].1 += n.cross(pc - pb) * inv;
        grads[slot(b)].1 += n.cross(pa - pc) * inv;
        grads[slot(c)].1 += n.cross(pb - pa) * inv;
    }
    ConstraintEval { value, grads }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_constraint_gradients_are_opposed_units() {
        let positions = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let kind = ConstraintKind::Distance { i: 0, j: 1, rest: 1.0, one_sided: false };
        let eval = kind.evaluate(&positions).unwrap();
        assert!((eval.value - 1.0).abs() < 1e-12);
        assert_eq!(eval.grads[0].1, Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(eval.grads[1].1, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn one_sided_distance_inactive_beyond_rest() {
        let positions = vec![Vec3::ZERO, Vec3::new(1.5, 0.0, 0.0)];
        let kind = ConstraintKind::Distance { i: 0, j: 1, rest: 1.0, one_sided: true };
        assert!(kind.evaluate(&positions).is_none());
        let near = vec![Vec3::ZERO, Vec3::new(0.5, 0.0, 0.0)];
        let eval = kind.evaluate(&near).unwrap();
        assert!((eval.value + 0.5).abs() < 1e-12);
    }

    #[test]
    fn plane_constraint_only_active_below() {
        let kind = ConstraintKind::Plane { i: 0, normal: Vec3::Y, offset: 0.0 };
        assert!(kind.evaluate(&[Vec3::new(0.0, 0.5, 0.0)]).is_none());
        let eval = kind.evaluate(&[Vec3::new(0.0, -0.25, 0.0)]).unwrap();
        assert!((eval.value + 0.25).abs() < 1e-12);
        assert_eq!(eval.grads[0].1, Vec3::Y);
    }

    #[test]
    fn area_of_right_triangle() {
        let positions = vec![
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let eval = area_eval(&[[0, 1, 2]], &[0, 1, 2], &positions);
        assert!((eval.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn area_of_equilateral_triangle() {
        let positions = vec![
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 3.0f64.sqrt() / 2.0, 0.0),
        ];
        let eval = area_eval(&[[0, 1, 2]], &[0, 1, 2], &positions);
        assert!((eval.value - 3.0f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_contributes_no_gradient() {
        let positions = vec![
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let eval = area_eval(&[[0, 1, 2]], &[0, 1, 2], &positions);
        assert!(eval.value.abs() < 1e-12);
        for (_, g) in &eval.grads {
            assert_eq!(*g, Vec3::ZERO);
        }
    }

    #[test]
    fn area_gradients_match_finite_differences() {
        let mut positions = vec![
            Vec3::new(0.1, 0.0, 0.05),
            Vec3::new(1.0, 0.2, -0.1),
            Vec3::new(0.4, 0.9, 0.3),
            Vec3::new(-0.6, 0.7, -0.2),
        ];
        let fan = vec![[0u32, 1, 2], [0u32, 2, 3]];
        let parts = vec![0u32, 1, 2, 3];
        let eval = area_eval(&fan, &parts, &positions);
        let h = 1e-7;
        for (slot, &(idx, g)) in eval.grads.iter().enumerate() {
            let _ = slot;
            for (set, get) in [
                (0usize, g.x),
                (1usize, g.y),
                (2usize, g.z),
            ] {
                let orig = positions[idx as usize];
                let mut bump = orig;
                match set {
                    0 => bump.x += h,
                    1 => bump.y += h,
                    _ => bump.z += h,
                }
                positions[idx as usize] = bump;
                let up = area_eval(&fan, &parts, &positions).value;
                let mut bump = orig;
                match set {
                    0 => bump.x -= h,
                    1 => bump.y -= h,
                    _ => bump.z -= h,
                }
                positions[idx as usize] = bump;
                let down = area_eval(&fan, &parts, &positions).value;
                positions[idx as usize] = orig;
                let fd = (up - down) / (2.0 * h);
                assert!(
                    (fd - get).abs() <= 1e-4 * get.abs().max(1e-6),
                    "fd {fd} analytic {get}"
                );
            }
        }
    }
}
