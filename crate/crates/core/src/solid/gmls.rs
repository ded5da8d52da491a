//! Moving-least-squares transfer of motion from simulation particles onto
//! render kernels. Weights are built once on the rest configuration and
//! reproduce constant and linear fields exactly (degree-1 basis).

use rayon::prelude::*;

use crate::fluid::NeighborGrid;
use crate::math::{Mat3, SphKernel, Vec3};

/// Per-kernel interpolation stencil: neighbor indices into the simulation
/// particle set plus fixed weights.
#[derive(Debug, Clone)]
pub struct GmlsBinding {
    pub neighbors: Vec<u32>,
    pub weights: Vec<f64>,
    /// Conditioning failed at bind time; weights are normalized
    /// inverse-distance instead (constants still reproduce, linears do not).
    pub shepard_fallback: bool,
}

impl GmlsBinding {
    /// Build a binding for the point `target` against `rest_positions`,
    /// using its `k` nearest particles.
    pub fn build(
        target: Vec3,
        rest_positions: &[Vec3],
        grid: &NeighborGrid,
        k: usize,
    ) -> GmlsBinding {
        assert!(k >= 4, "degree-1 basis needs at least 4 neighbors");
        let neighbors = grid.k_nearest(rest_positions, target, k, None);
        build_from_neighbors(target, rest_positions, neighbors)
    }

    /// Interpolate positions (or any vector field sampled at the particles).
    pub fn interpolate_vec3(&self, field: &[Vec3]) -> Vec3 {
        let mut out = Vec3::ZERO;
        for (&j, &w) in self.neighbors.iter().zip(&self.weights) {
            out += field[j as usize] * w;
        }
        out
    }

    /// Interpolate matrices component-wise (deformation gradients).
    pub fn interpolate_mat3(&self, field: &[Mat3]) -> Mat3 {
        let mut out = Mat3::ZERO;
        for (&j, &w) in self.neighbors.iter().zip(&self.weights) {
            out += field[j as usize] * w;
        }
        out
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn build_from_neighbors(target: Vec3, rest_positions: &[Vec3], neighbors: Vec<u32>) -> GmlsBinding {
    let max_dist = neighbors
        .iter()
        .map(|&j| (rest_positions[j as usize] - target).norm())
        .fold(0.0f64, f64::max);
    let support = SphKernel::new((1.2 * max_dist).max(1e-12)).expect("positive support");

    // Moment matrix of the affine basis p(x) = [1, x - target].
    let mut moment = [[0.0f64; 4]; 4];
    let mut basis: Vec<[f64; 4]> = Vec::with_capacity(neighbors.len());
    let mut w_geom: Vec<f64> = Vec::with_capacity(neighbors.len());
    for &j in &neighbors {
        let d = rest_positions[j as usize] - target;
        let p = [1.0, d.x, d.y, d.z];
        let w = support.value_unchecked(d).max(1e-12);
        for r in 0..4 {
            for c in 0..4 {
                moment[r][c] += w * p[r] * p[c];
            }
        }
        basis.push(p);
        w_geom.push(w);
    }

    // phi_j = w_j * p_j . (M^-1 e0); constants and linears reproduce exactly.
    match solve4(moment, [1.0, 0.0, 0.0, 0.0]) {
        Some(coeff) => {
            let weights = basis
                .iter()
                .zip(&w_geom)
                .map(|(p, &w)| w * (p[0] * coeff[0] + p[1] * coeff[1] + p[2] * coeff[2] + p[3] * coeff[3]))
                .collect();
            GmlsBinding { neighbors, weights, shepard_fallback: false }
        }
        None => {
            log::warn!("GMLS moment matrix ill-conditioned at {target:?}; falling back to inverse-distance weights");
            let raw: Vec<f64> = neighbors
                .iter()
                .map(|&j| 1.0 / ((rest_positions[j as usize] - target).norm() + 1e-9))
                .collect();
            let total: f64 = raw.iter().sum();
            let weights = raw.into_iter().map(|w| w / total).collect();
            GmlsBinding { neighbors, weights, shepard_fallback: true }
        }
    }
}

/// Bind every target point in parallel.
pub fn build_bindings(
    targets: &[Vec3],
    rest_positions: &[Vec3],
    k: usize,
    grid_cell: f64,
) -> Vec<GmlsBinding> {
    let grid = NeighborGrid::build(rest_positions, grid_cell);
    targets
        .par_iter()
        .map(|&t| GmlsBinding::build(t, rest_positions, &grid, k))
        .collect()
}

/// Gaussian elimination with partial pivoting; `None` when a pivot is
/// too small relative to the matrix scale.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for c in col..4 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..4).rev() {
        let mut acc = b[row];
        for c in row + 1..4 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_cloud(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect()
    }

    #[test]
    fn weights_partition_unity() {
        let rest = random_cloud(60, 1);
        let bindings = build_bindings(
            &[Vec3::splat(0.5), Vec3::new(0.2, 0.8, 0.4)],
            &rest,
            8,
            0.3,
        );
        for b in &bindings {
            assert!(!b.shepard_fallback);
            assert!((b.weight_sum() - 1.0).abs() < 1e-10, "sum {}", b.weight_sum());
        }
    }

    #[test]
    fn translation_is_transferred_exactly() {
        let rest = random_cloud(60, 2);
        let target = Vec3::new(0.4, 0.6, 0.5);
        let grid = NeighborGrid::build(&rest, 0.3);
        let binding = GmlsBinding::build(target, &rest, &grid, 8);
        let t = Vec3::new(1.0, -2.0, 0.3);
        let moved: Vec<Vec3> = rest.iter().map(|&p| p + t).collect();
        let out = binding.interpolate_vec3(&moved);
        assert!((out - (target + t)).norm() < 1e-10);
    }

    #[test]
    fn linear_fields_reproduce() {
        let rest = random_cloud(80, 3);
        let target = Vec3::new(0.5, 0.5, 0.5);
        let grid = NeighborGrid::build(&rest, 0.3);
        let binding = GmlsBinding::build(target, &rest, &grid, 10);
        let l = Mat3::from_rows([1.2, 0.3, -0.1], [0.0, 0.9, 0.4], [-0.2, 0.1, 1.5]);
        let mapped: Vec<Vec3> = rest.iter().map(|&p| l * p).collect();
        let out = binding.interpolate_vec3(&mapped);
        assert!((out - l * target).norm() < 1e-8, "err {}", (out - l * target).norm());
    }

    #[test]
    fn constant_matrix_field_reproduces() {
        let rest = random_cloud(50, 4);
        let grid = NeighborGrid::build(&rest, 0.3);
        let binding = GmlsBinding::build(Vec3::splat(0.5), &rest, &grid, 8);
        let f = Mat3::from_rows([2.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.3, 0.0, 0.5]);
        let field = vec![f; rest.len()];
        let out = binding.interpolate_mat3(&field);
        let err: f64 = (out - f).m.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }

    #[test]
    fn degenerate_neighborhood_falls_back_to_shepard() {
        // All neighbors collinear: the affine moment matrix is singular.
        let rest: Vec<Vec3> = (0..8).map(|i| Vec3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let grid = NeighborGrid::build(&rest, 1.0);
        let binding = GmlsBinding::build(Vec3::new(0.35, 0.2, 0.0), &rest, &grid, 8);
        assert!(binding.shepard_fallback);
        assert!((binding.weight_sum() - 1.0).abs() < 1e-10);
    }
}
