use std::collections::HashMap;

use rayon::prelude::*;

use crate::math::Vec3;

/// Uniform hash grid over particle positions; cell size equals the query
/// radius so a 27-cell gather covers the whole support.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl NeighborGrid {
    pub fn build(positions: &[Vec3], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell must be positive");
        // Keys in parallel, insertion sequential so per-cell lists stay in
        // ascending particle order (deterministic gather order).
        let keys: Vec<(i64, i64, i64)> = positions
            .par_iter()
            .map(|p| Self::key_at(*p, cell))
            .collect();
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, key) in keys.into_iter().enumerate() {
            cells.entry(key).or_default().push(i as u32);
        }
        NeighborGrid { cell, cells }
    }

    #[inline]
    fn key_at(p: Vec3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// Visit every particle `j != i` with `|p_j - center| <= radius`,
    /// which requires `radius <= cell`. Deterministic visit order.
    pub fn for_each_within(
        &self,
        positions: &[Vec3],
        center: Vec3,
        exclude: Option<u32>,
        radius: f64,
        mut f: impl FnMut(u32, f64),
    ) {
        debug_assert!(radius <= self.cell * (1.0 + 1e-12));
        let (cx, cy, cz) = Self::key_at(center, self.cell);
        let r2 = radius * radius;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &j in bucket {
                        if Some(j) == exclude {
                            continue;
                        }
                        let d2 = (positions[j as usize] - center).norm_squared();
                        if d2 > 0.0 && d2 <= r2 {
                            f(j, d2);
                        }
                    }
                }
            }
        }
    }

    /// The `k` nearest particles to `query` (excluding `exclude`), searched
    /// over expanding cell rings. Ties broken by particle index.
    pub fn k_nearest(
        &self,
        positions: &[Vec3],
        query: Vec3,
        k: usize,
        exclude: Option<u32>,
    ) -> Vec<u32> {
        let (cx, cy, cz) = Self::key_at(query, self.cell);
        let mut found: Vec<(f64, u32)> = Vec::new();
        let mut ring: i64 = 0;
        // Generous cap; scenes are bounded so an empty grid terminates fast.
        let max_ring = 1_000;
        loop {
            let mut any_cell = false;
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let Some(bucket) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        any_cell = true;
                        for &j in bucket {
                            if Some(j) == exclude {
                                continue;
                            }
                            let d2 = (positions[j as usize] - query).norm_squared();
                            found.push((d2, j));
                        }
                    }
                }
            }
            let _ = any_cell;
            found.sort_by(|a, b| a.partial_cmp(b).unwrap());
            found.truncate(k.max(found.len().min(k)));
            // A particle in ring R+1 is at least R cells away along an axis.
            let safe = ring as f64 * self.cell;
            if found.len() >= k && found[k - 1].0.sqrt() <= safe {
                break;
            }
            ring += 1;
            if ring > max_ring {
                break;
            }
        }
        found.truncate(k);
        found.into_iter().map(|(_, j)| j).collect()
    }
}

/// Per-particle neighbor lists: `j` is in the list of `i` iff
/// `0 < |p_i - p_j| <= r`. Symmetric by construction.
pub fn find_neighbors(positions: &[Vec3], r: f64) -> Vec<Vec<u32>> {
    let grid = NeighborGrid::build(positions, r);
    positions
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut list = Vec::new();
            grid.for_each_within(positions, p, Some(i as u32), r, |j, _| list.push(j));
            list
        })
        .collect()
}
