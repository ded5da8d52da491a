//! Tiled software rasterization of projected kernels.
//!
//! Per pixel, front-to-back accumulation
//! `c_i = sum_k G_k s_k c_k prod_{j<k} (1 - G_j s_j)` over kernels sorted
//! by center depth (ties broken by index). Footprints are cut at three
//! sigma and accumulation stops once transmittance drops below 1e-3.

use rayon::prelude::*;

use crate::buffers::RenderLayer;
use crate::project::Splat2d;

pub const TILE: usize = 16;
const TRANSMITTANCE_FLOOR: f64 = 1e-3;
const SIGMA_CUTOFF_SQ: f64 = 9.0;

/// A projected kernel ready for compositing.
#[derive(Debug, Clone, Copy)]
pub struct ColorSplat {
    pub splat: Splat2d,
    pub color: [f64; 3],
    pub opacity: f64,
}

/// Front-to-back accumulation of one pixel's ordered `(color, alpha)`
/// stack; the reference the tiled rasterizer mirrors. Returns premultiplied
/// color and the remaining transmittance.
pub fn composite_stack(entries: &[([f64; 3], f64)]) -> ([f64; 3], f64) {
    let mut color = [0.0f64; 3];
    let mut transmittance = 1.0f64;
    for (c, alpha) in entries {
        let weight = transmittance * alpha;
        for ch in 0..3 {
            color[ch] += weight * c[ch];
        }
        transmittance *= 1.0 - alpha;
        if transmittance < TRANSMITTANCE_FLOOR {
            break;
        }
    }
    (color, transmittance)
}

/// Depth-sort order: by center depth, ties by index.
fn sorted_indices(splats: &[ColorSplat]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..splats.len() as u32).collect();
    order.sort_by(|&a, &b| {
        splats[a as usize]
            .splat
            .depth
            .partial_cmp(&splats[b as usize].splat.depth)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Bin splat indices (already in processing order) into tiles by their
/// 3-sigma bounding boxes.
fn bin_to_tiles(
    splats: &[ColorSplat],
    order: &[u32],
    width: usize,
    height: usize,
) -> Vec<Vec<u32>> {
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for &idx in order {
        let s = &splats[idx as usize].splat;
        let r = s.radius();
        if !r.is_finite() || r <= 0.0 {
            continue;
        }
        let x0 = ((s.mean[0] - r).floor().max(0.0) as usize) / TILE;
        let y0 = ((s.mean[1] - r).floor().max(0.0) as usize) / TILE;
        let x1 = ((s.mean[0] + r).ceil().min(width as f64 - 1.0).max(0.0) as usize) / TILE;
        let y1 = ((s.mean[1] + r).ceil().min(height as f64 - 1.0).max(0.0) as usize) / TILE;
        if s.mean[0] + r < 0.0 || s.mean[1] + r < 0.0 {
            continue;
        }
        for ty in y0..=y1.min(tiles_y - 1) {
            for tx in x0..=x1.min(tiles_x - 1) {
                bins[ty * tiles_x + tx].push(idx);
            }
        }
    }
    bins
}

/// Alpha-composite sorted splats into color, coverage, and depth buffers.
pub fn splat_color(splats: &[ColorSplat], width: usize, height: usize) -> RenderLayer {
    let order = sorted_indices(splats);
    let bins = bin_to_tiles(splats, &order, width, height);
    let tiles_x = width.div_ceil(TILE);

    let mut layer = RenderLayer::new(width, height);
    let tile_results: Vec<(usize, Vec<([f64; 3], f64, f64)>)> = bins
        .par_iter()
        .enumerate()
        .map(|(tile_idx, bin)| {
            let tx = (tile_idx % tiles_x) * TILE;
            let ty = (tile_idx / tiles_x) * TILE;
            let w = TILE.min(width - tx);
            let h = TILE.min(height - ty);
            let mut pixels = vec![([0.0f64; 3], 0.0f64, 0.0f64); w * h];
            if bin.is_empty() {
                return (tile_idx, pixels);
            }
            let conics: Vec<Option<[f64; 3]>> = bin
                .iter()
                .map(|&i| splats[i as usize].splat.conic())
                .collect();
            for py in 0..h {
                for px in 0..w {
                    let x = (tx + px) as f64 + 0.5;
                    let y = (ty + py) as f64 + 0.5;
                    let mut color = [0.0f64; 3];
                    let mut transmittance = 1.0f64;
                    let mut depth_acc = 0.0f64;
                    for (slot, &idx) in bin.iter().enumerate() {
                        let Some([ca, cb, cc]) = conics[slot] else { continue };
                        let s = &splats[idx as usize];
                        let dx = x - s.splat.mean[0];
                        let dy = y - s.splat.mean[1];
                        let q = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy;
                        if q > SIGMA_CUTOFF_SQ {
                            continue;
                        }
                        let g = (-0.5 * q).exp();
                        let alpha = g * s.opacity;
                        if alpha <= 0.0 {
                            continue;
                        }
                        let weight = transmittance * alpha;
                        for c in 0..3 {
                            color[c] += weight * s.color[c];
                        }
                        depth_acc += weight * s.splat.depth;
                        transmittance *= 1.0 - alpha;
                        if transmittance < TRANSMITTANCE_FLOOR {
                            break;
                        }
                    }
                    pixels[py * w + px] = (color, 1.0 - transmittance, depth_acc);
                }
            }
            (tile_idx, pixels)
        })
        .collect();

    for (tile_idx, pixels) in tile_results {
        let tx = (tile_idx % tiles_x) * TILE;
        let ty = (tile_idx / tiles_x) * TILE;
        let w = TILE.min(width - tx);
        let h = TILE.min(height - ty);
        for py in 0..h {
            for px in 0..w {
                let (color, alpha, depth_acc) = pixels[py * w + px];
                let o = (ty + py) * width + (tx + px);
                layer.color[o] = [color[0] as f32, color[1] as f32, color[2] as f32];
                layer.alpha[o] = alpha as f32;
                layer.depth[o] = if alpha > 1e-6 {
                    (depth_acc / alpha) as f32
                } else {
                    f32::INFINITY
                };
            }
        }
    }
    layer
}

/// Additive thickness: `tau_i = sum_k G_k(i) * amplitude_k`, accumulated in
/// kernel index order (no depth sort, order-independent by construction).
pub fn splat_thickness(
    splats: &[(Splat2d, f64)],
    width: usize,
    height: usize,
) -> Vec<f32> {
    let color_like: Vec<ColorSplat> = splats
        .iter()
        .map(|&(splat, amplitude)| ColorSplat {
            splat,
            color: [amplitude, 0.0, 0.0],
            opacity: 1.0,
        })
        .collect();
    let order: Vec<u32> = (0..color_like.len() as u32).collect();
    let bins = bin_to_tiles(&color_like, &order, width, height);
    let tiles_x = width.div_ceil(TILE);

    let mut out = vec![0.0f32; width * height];
    let tile_results: Vec<(usize, Vec<f64>)> = bins
        .par_iter()
        .enumerate()
        .map(|(tile_idx, bin)| {
            let tx = (tile_idx % tiles_x) * TILE;
            let ty = (tile_idx / tiles_x) * TILE;
            let w = TILE.min(width - tx);
            let h = TILE.min(height - ty);
            let mut acc = vec![0.0f64; w * h];
            let conics: Vec<Option<[f64; 3]>> = bin
                .iter()
                .map(|&i| color_like[i as usize].splat.conic())
                .collect();
            for py in 0..h {
                for px in 0..w {
                    let x = (tx + px) as f64 + 0.5;
                    let y = (ty + py) as f64 + 0.5;
                    let mut tau = 0.0f64;
                    for (slot, &idx) in bin.iter().enumerate() {
                        let Some([ca, cb, cc]) = conics[slot] else { continue };
                        let s = &color_like[idx as usize];
                        let dx = x - s.splat.mean[0];
                        let dy = y - s.splat.mean[1];
                        let q = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy;
                        if q > SIGMA_CUTOFF_SQ {
                            continue;
                        }
                        tau += (-0.5 * q).exp() * s.color[0];
                    }
                    acc[py * w + px] = tau;
                }
            }
            (tile_idx, acc)
        })
        .collect();

    for (tile_idx, acc) in tile_results {
        let tx = (tile_idx % tiles_x) * TILE;
        let ty = (tile_idx / tiles_x) * TILE;
        let w = TILE.min(width - tx);
        let h = TILE.min(height - ty);
        for py in 0..h {
            for px in 0..w {
                out[(ty + py) * width + (tx + px)] = acc[py * w + px] as f32;
            }
        }
    }
    out
}
