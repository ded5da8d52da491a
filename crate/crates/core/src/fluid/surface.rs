//! Surface-particle detection by spherical-screen occlusion, and surface
//! normals from the density-constraint gradient.
//!
//! Each neighbor shadows a `[theta +- dtheta] x [phi +- dphi]` rectangle of
//! an 18 x 36 spherical screen around the particle; the particle is on the
//! surface when the shadowed fraction stays below a threshold.

use std::f64::consts::PI;

use super::FluidParams;
use crate::math::{SphKernel, Vec3};

pub const SCREEN_ROWS: usize = 18;
pub const SCREEN_COLS: usize = 36;
pub const SCREEN_CELLS: usize = SCREEN_ROWS * SCREEN_COLS;
const CELL_STEP: f64 = PI / SCREEN_ROWS as f64;
const ROW_MASK: u32 = (1 << SCREEN_ROWS) - 1;

/// Occlusion state of one fluid particle. Each mask entry is one azimuth
/// column; bit `h` of a column marks polar row `h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceInfo {
    pub is_surface: bool,
    pub mask: [u32; SCREEN_COLS],
}

impl SurfaceInfo {
    pub fn masked_cells(&self) -> usize {
        self.mask.iter().map(|c| c.count_ones() as usize).sum()
    }

    pub fn masked_fraction(&self) -> f64 {
        self.masked_cells() as f64 / SCREEN_CELLS as f64
    }
}

/// Classify particle `i` given its fluid neighbors.
pub fn detect_surface(
    i: u32,
    positions: &[Vec3],
    neighbors: &[u32],
    params: &FluidParams,
) -> SurfaceInfo {
    let mut mask = [0u32; SCREEN_COLS];
    let pi = positions[i as usize];
    let r_particle = params.particle_radius;

    for &j in neighbors {
        let delta = positions[j as usize] - pi;
        let d = delta.norm();
        if d <= 1e-12 {
            // Coincident particle: no direction to shadow, blanket the screen.
            mask = [ROW_MASK; SCREEN_COLS];
            break;
        }

        let (theta, phi) = spherical_angles(delta, d);
        let half_angle = if d <= r_particle {
            // Overlapping sphere fully occludes its direction.
            0.5 * PI
        } else if params.printed_occlusion_angle {
            // Dimensionally inconsistent variant kept behind a switch; see
            // FluidParams::printed_occlusion_angle.
            (r_particle / (d * d - r_particle * r_particle)).atan()
        } else {
            (r_particle / (d * d - r_particle * r_particle).sqrt()).atan()
        };
        mark_rectangle(&mut mask, theta, phi, half_angle);
    }

    let info = SurfaceInfo { is_surface: false, mask };
    SurfaceInfo {
        is_surface: info.masked_fraction() < params.occlusion_threshold,
        mask: info.mask,
    }
}

/// Polar angle from +y in `[0, pi]` and azimuth in the xz-plane in
/// `(-pi, pi]`.
fn spherical_angles(delta: Vec3, norm: f64) -> (f64, f64) {
    let theta = (delta.y / norm).clamp(-1.0, 1.0).acos();
    let phi = delta.z.atan2(delta.x);
    (theta, phi)
}

/// Mark every cell whose center lies in `[theta +- half] x [phi +- half]`,
/// with azimuth wraparound. The rectangle parameterization degenerates at
/// the poles, so rows fully inside a pole-spanning cap are marked across
/// every column.
fn mark_rectangle(mask: &mut [u32; SCREEN_COLS], theta: f64, phi: f64, half: f64) {
    // Rows: centers at (h + 0.5) * step.
    let row_lo = ((theta - half) / CELL_STEP - 0.5).ceil().max(0.0) as usize;
    let row_hi = ((theta + half) / CELL_STEP - 0.5).floor().min(SCREEN_ROWS as f64 - 1.0);
    if row_hi >= 0.0 && row_lo < SCREEN_ROWS {
        let row_hi = row_hi as usize;
        if row_lo <= row_hi {
            let mut row_bits = 0u32;
            for h in row_lo..=row_hi {
                row_bits |= 1 << h;
            }
            if half >= PI {
                for col in mask.iter_mut() {
                    *col |= row_bits;
                }
                return;
            }
            // Columns: centers at -pi + (c + 0.5) * step, wrapping mod 36.
            let col_lo = ((phi - half + PI) / CELL_STEP - 0.5).ceil() as i64;
            let col_hi = ((phi + half + PI) / CELL_STEP - 0.5).floor() as i64;
            for c in col_lo..=col_hi {
                let col = c.rem_euclid(SCREEN_COLS as i64) as usize;
                mask[col] |= row_bits;
            }
        }
    }

    // A cap that spans a pole covers all azimuths out to the leftover
    // angle: a direction at polar t is inside for every column when
    // theta + t <= half (north) or 2 pi - theta - t <= half (south).
    if half >= theta {
        let limit = half - theta;
        let hi = (limit / CELL_STEP - 0.5).floor();
        if hi >= 0.0 {
            let mut bits = 0u32;
            for h in 0..=(hi as usize).min(SCREEN_ROWS - 1) {
                bits |= 1 << h;
            }
            for col in mask.iter_mut() {
                *col |= bits;
            }
        }
    }
    if theta + half >= PI {
        let start = 2.0 * PI - theta - half;
        let lo = ((start / CELL_STEP - 0.5).ceil()).max(0.0) as usize;
        if lo < SCREEN_ROWS {
            let mut bits = 0u32;
            for h in lo..SCREEN_ROWS {
                bits |= 1 << h;
            }
            for col in mask.iter_mut() {
                *col |= bits;
            }
        }
    }
}

/// Surface normal `n = normalize(-grad_i C_i)`; `None` when the gradient
/// magnitude is degenerate (the particle skips tension this step).
pub fn surface_normal(
    i: u32,
    positions: &[Vec3],
    neighbors: &[u32],
    kernel: &SphKernel,
    mass_over_rest_density: f64,
) -> Option<Vec3> {
    let pi = positions[i as usize];
    let mut grad = Vec3::ZERO;
    for &j in neighbors {
        grad += kernel.gradient_unchecked(pi - positions[j as usize]) * mass_over_rest_density;
    }
    (-grad).normalized(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::FluidParams;

    fn test_params(spacing: f64) -> FluidParams {
        FluidParams::from_spacing(1000.0, spacing)
    }

    #[test]
    fn isolated_particle_is_surface_with_empty_mask() {
        let params = test_params(0.1);
        let positions = vec![Vec3::ZERO];
        let info = detect_surface(0, &positions, &[], &params);
        assert!(info.is_surface);
        assert_eq!(info.masked_cells(), 0);
    }

    #[test]
    fn lattice_interior_particle_is_not_surface() {
        let params = test_params(0.1);
        // 5x5x5 lattice at spacing strictly below r/2, so the kernel covers
        // more than two shells of neighbors.
        let lattice = 0.08;
        assert!(lattice < 0.5 * params.kernel_radius);
        let mut positions = Vec::new();
        let mut center = 0;
        for ix in -2i32..=2 {
            for iy in -2i32..=2 {
                for iz in -2i32..=2 {
                    if ix == 0 && iy == 0 && iz == 0 {
                        center = positions.len() as u32;
                    }
                    positions.push(Vec3::new(
                        ix as f64 * lattice,
                        iy as f64 * lattice,
                        iz as f64 * lattice,
                    ));
                }
            }
        }
        let r = params.kernel_radius;
        let neighbors: Vec<u32> = (0..positions.len() as u32)
            .filter(|&j| {
                j != center && (positions[j as usize] - positions[center as usize]).norm() <= r
            })
            .collect();
        let info = detect_surface(center, &positions, &neighbors, &params);
        assert!(
            info.masked_fraction() >= params.occlusion_threshold,
            "masked fraction {}",
            info.masked_fraction()
        );
        assert!(!info.is_surface);
    }

    #[test]
    fn particle_atop_slab_is_surface_with_half_masked() {
        let spacing = 0.1;
        let mut params = test_params(spacing);
        // Touching-sphere radius: the half-screen expectation assumes caps
        // that do not spill far past the horizon.
        params.particle_radius = 0.5 * spacing;
        let mut positions = vec![Vec3::ZERO]; // the probe, on top of the slab
        for ix in -4i32..=4 {
            for iy in -4i32..=0 {
                for iz in -4i32..=4 {
                    if ix == 0 && iy == 0 && iz == 0 {
                        continue;
                    }
                    positions.push(Vec3::new(
                        ix as f64 * spacing,
                        iy as f64 * spacing,
                        iz as f64 * spacing,
                    ));
                }
            }
        }
        let r = params.kernel_radius;
        let neighbors: Vec<u32> = (1..positions.len() as u32)
            .filter(|&j| (positions[j as usize] - positions[0]).norm() <= r)
            .collect();
        let info = detect_surface(0, &positions, &neighbors, &params);
        assert!(info.is_surface, "masked fraction {}", info.masked_fraction());
        let f = info.masked_fraction();
        assert!(f > 0.3 && f < 0.7, "masked fraction {f}");
    }

    #[test]
    fn coincident_neighbor_fully_occludes() {
        let params = test_params(0.1);
        let positions = vec![Vec3::ZERO, Vec3::ZERO];
        let info = detect_surface(0, &positions, &[1], &params);
        assert_eq!(info.masked_cells(), SCREEN_CELLS);
        assert!(!info.is_surface);
    }

    #[test]
    fn normal_above_slab_points_up() {
        let spacing = 0.1;
        let params = test_params(spacing);
        let kernel = SphKernel::new(params.kernel_radius).unwrap();
        let m_over_rho = params.particle_mass / params.rest_density;
        let mut positions = vec![Vec3::ZERO];
        for ix in -4i32..=4 {
            for iy in -4i32..=0 {
                for iz in -4i32..=4 {
                    if ix == 0 && iy == 0 && iz == 0 {
                        continue;
                    }
                    positions.push(Vec3::new(
                        ix as f64 * spacing,
                        iy as f64 * spacing,
                        iz as f64 * spacing,
                    ));
                }
            }
        }
        let neighbors: Vec<u32> = (1..positions.len() as u32)
            .filter(|&j| (positions[j as usize] - positions[0]).norm() <= params.kernel_radius)
            .collect();
        let n = surface_normal(0, &positions, &neighbors, &kernel, m_over_rho).unwrap();
        assert!((n.norm() - 1.0).abs() < 1e-9);
        assert!(n.dot(Vec3::Y) > 0.9, "normal {n:?}");
    }

    #[test]
    fn symmetric_shell_has_degenerate_normal() {
        let params = test_params(0.1);
        let kernel = SphKernel::new(params.kernel_radius).unwrap();
        let m_over_rho = params.particle_mass / params.rest_density;
        // Six axis neighbors cancel exactly.
        let d = 0.12;
        let positions = vec![
            Vec3::ZERO,
            Vec3::new(d, 0.0, 0.0),
            Vec3::new(-d, 0.0, 0.0),
            Vec3::new(0.0, d, 0.0),
            Vec3::new(0.0, -d, 0.0),
            Vec3::new(0.0, 0.0, d),
            Vec3::new(0.0, 0.0, -d),
        ];
        let neighbors: Vec<u32> = (1..=6).collect();
        assert!(surface_normal(0, &positions, &neighbors, &kernel, m_over_rho).is_none());
    }
}
