//! Blue-noise volume sampling of watertight meshes: annulus dart growth
//! from interior seeds over a rejection grid (Bridson-style), restricted to
//! the mesh interior.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mesh::{MeshError, TriangleMesh};
use crate::math::Vec3;

/// Fill the interior of `mesh` with points at least `radius` apart.
///
/// Deterministic for a given `seed`. Errors if the mesh is not watertight.
pub fn poisson_sample_volume(
    mesh: &TriangleMesh,
    radius: f64,
    seed: u64,
) -> Result<Vec<Vec3>, MeshError> {
    assert!(radius > 0.0 && radius.is_finite(), "sampling radius must be positive");
    mesh.check_watertight()?;

    let (lo, hi) = mesh.bounds();
    let span = hi - lo;
    let cell = radius / 3.0f64.sqrt();
    let dims = [
        ((span.x / cell).ceil() as usize).max(1),
        ((span.y / cell).ceil() as usize).max(1),
        ((span.z / cell).ceil() as usize).max(1),
    ];
    let mut grid: Vec<i32> = vec![-1; dims[0] * dims[1] * dims[2]];
    let cell_of = |p: Vec3| -> [usize; 3] {
        [
            (((p.x - lo.x) / cell) as usize).min(dims[0] - 1),
            (((p.y - lo.y) / cell) as usize).min(dims[1] - 1),
            (((p.z - lo.z) / cell) as usize).min(dims[2] - 1),
        ]
    };
    let flat = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Vec3> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    let far_enough = |p: Vec3, samples: &[Vec3], grid: &[i32]| -> bool {
        let c = cell_of(p);
        let reach = 3isize; // cell = r/sqrt(3), so +-3 cells covers radius
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let nx = c[0] as isize + dx;
                    let ny = c[1] as isize + dy;
                    let nz = c[2] as isize + dz;
                    if nx < 0
                        || ny < 0
                        || nz < 0
                        || nx >= dims[0] as isize
                        || ny >= dims[1] as isize
                        || nz >= dims[2] as isize
                    {
                        continue;
                    }
                    let idx = grid[flat([nx as usize, ny as usize, nz as usize])];
                    if idx >= 0 && (samples[idx as usize] - p).norm() < radius {
                        return false;
                    }
                }
            }
        }
        true
    };

    let push = |p: Vec3, samples: &mut Vec<Vec3>, grid: &mut Vec<i32>, active: &mut Vec<usize>| {
        let idx = samples.len();
        grid[flat(cell_of(p))] = idx as i32;
        samples.push(p);
        active.push(idx);
    };

    // Interior seeds: covers disconnected components of the volume.
    let mut seed_tries = 0;
    while seed_tries < 4096 && samples.len() < 32 {
        seed_tries += 1;
        let p = Vec3::new(
            lo.x + rng.gen::<f64>() * span.x,
            lo.y + rng.gen::<f64>() * span.y,
            lo.z + rng.gen::<f64>() * span.z,
        );
        if mesh.contains(p) && far_enough(p, &samples, &grid) {
            push(p, &mut samples, &mut grid, &mut active);
        }
    }

    // Annulus growth.
    const ATTEMPTS: usize = 30;
    while let Some(slot) = active.last().copied() {
        let base = samples[slot];
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let dir = loop {
                let v = Vec3::new(
                    rng.gen::<f64>() * 2.0 - 1.0,
                    rng.gen::<f64>() * 2.0 - 1.0,
                    rng.gen::<f64>() * 2.0 - 1.0,
                );
                if v.norm_squared() <= 1.0 && v.norm_squared() > 1e-6 {
                    break v.normalized(0.0).unwrap();
                }
            };
            let dist = radius * (1.0 + rng.gen::<f64>());
            let p = base + dir * dist;
            if p.x < lo.x || p.y < lo.y || p.z < lo.z || p.x > hi.x || p.y > hi.y || p.z > hi.z {
                continue;
            }
            if mesh.contains(p) && far_enough(p, &samples, &grid) {
                push(p, &mut samples, &mut grid, &mut active);
                placed = true;
                break;
            }
        }
        if !placed {
            active.retain(|&s| s != slot);
        }
    }

    Ok(samples)
}

/// Brute-force dart throwing until `patience` consecutive rejections; the
/// independent oracle for sample-count checks.
pub fn dart_throw_sample_volume(
    mesh: &TriangleMesh,
    radius: f64,
    seed: u64,
    patience: usize,
) -> Result<Vec<Vec3>, MeshError> {
    mesh.check_watertight()?;
    let (lo, hi) = mesh.bounds();
    let span = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Vec3> = Vec::new();
    let mut misses = 0;
    while misses < patience {
        let p = Vec3::new(
            lo.x + rng.gen::<f64>() * span.x,
            lo.y + rng.gen::<f64>() * span.y,
            lo.z + rng.gen::<f64>() * span.z,
        );
        if mesh.contains(p) && samples.iter().all(|&s| (s - p).norm() >= radius) {
            samples.push(p);
            misses = 0;
        } else {
            misses += 1;
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solid::mesh::box_mesh;

    #[test]
    fn samples_respect_spacing_and_containment() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(1.0));
        let radius = 0.4;
        let samples = poisson_sample_volume(&mesh, radius, 42).unwrap();
        assert!(!samples.is_empty());
        for (i, &a) in samples.iter().enumerate() {
            assert!(mesh.contains(a), "sample {a:?} escaped the mesh");
            for &b in &samples[i + 1..] {
                assert!((a - b).norm() >= radius, "pair closer than radius");
            }
        }
    }

    #[test]
    fn huge_radius_gives_single_sample() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(1.0));
        // Larger than the bounding-sphere diameter sqrt(3).
        let samples = poisson_sample_volume(&mesh, 2.0, 7).unwrap();
        assert_eq!(samples.len(), 1);
    }

    #[test]
    fn open_mesh_is_rejected_before_sampling() {
        let mut mesh = box_mesh(Vec3::ZERO, Vec3::splat(1.0));
        mesh.triangles.pop();
        assert!(poisson_sample_volume(&mesh, 0.2, 0).is_err());
    }

    #[test]
    fn count_tracks_dart_throwing_oracle() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(1.0));
        let radius = 0.1;
        let fast = poisson_sample_volume(&mesh, radius, 1).unwrap().len() as f64;
        let oracle = dart_throw_sample_volume(&mesh, radius, 2, 2000).unwrap().len() as f64;
        let ratio = fast / oracle;
        assert!(
            (0.7..=1.3).contains(&ratio),
            "sample count {fast} vs oracle {oracle} (ratio {ratio})"
        );
    }

    #[test]
    fn coverage_leaves_no_large_voids() {
        use rand::{Rng, SeedableRng};
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(1.0));
        let radius = 0.15;
        let samples = poisson_sample_volume(&mesh, radius, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let p = Vec3::new(rng.gen(), rng.gen(), rng.gen());
            if !mesh.contains(p) {
                continue;
            }
            let nearest = samples
                .iter()
                .map(|&s| (s - p).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= 2.0 * radius,
                "interior probe {p:?} is {nearest} from the nearest sample"
            );
        }
    }
}
