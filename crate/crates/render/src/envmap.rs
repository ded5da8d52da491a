use std::path::Path;

use splat_core::math::Vec3;

use crate::image::{read_pfm, read_ppm, ImageError, ImageRgb};

/// Equirectangular radiance map with a box-filtered mip chain indexed by
/// roughness. Mip 0 is the source image.
#[derive(Debug, Clone)]
pub struct EnvironmentMap {
    mips: Vec<ImageRgb>,
}

impl EnvironmentMap {
    pub fn from_image(source: ImageRgb) -> Self {
        let mut mips = vec![source];
        loop {
            let last = mips.last().unwrap();
            if last.width <= 2 || last.height <= 1 {
                break;
            }
            let w = (last.width / 2).max(1);
            let h = (last.height / 2).max(1);
            let mut next = ImageRgb::new(w, h);
            for y in 0..h {
                for x in 0..w {
                    let mut acc = [0.0f32; 3];
                    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let sx = (2 * x + dx).min(last.width - 1);
                        let sy = (2 * y + dy).min(last.height - 1);
                        let px = last.get(sx, sy);
                        for c in 0..3 {
                            acc[c] += px[c];
                        }
                    }
                    next.set(x, y, [acc[0] * 0.25, acc[1] * 0.25, acc[2] * 0.25]);
                }
            }
            mips.push(next);
        }
        EnvironmentMap { mips }
    }

    /// Load from a portable pixmap (P6) or portable float map (PF) file,
    /// decided by the magic bytes.
    pub fn load(path: &Path) -> Result<Self, ImageError> {
        let mut magic = [0u8; 2];
        {
            use std::io::Read;
            let mut f = std::fs::File::open(path)?;
            f.read_exact(&mut magic)?;
        }
        let image = match &magic {
            b"P6" => read_ppm(path)?,
            b"PF" => read_pfm(path)?,
            other => {
                return Err(ImageError::Format(format!(
                    "unsupported environment map magic {:?}",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        if image.data.iter().any(|px| px.iter().any(|v| *v < 0.0 || !v.is_finite())) {
            return Err(ImageError::Format("environment radiance must be non-negative".into()));
        }
        Ok(Self::from_image(image))
    }

    pub fn levels(&self) -> usize {
        self.mips.len()
    }

    pub fn mip(&self, level: usize) -> &ImageRgb {
        &self.mips[level.min(self.mips.len() - 1)]
    }

    /// Sample radiance along `dir` at a roughness-selected mip
    /// (`level = roughness * (levels - 1)`, trilinear).
    pub fn sample(&self, dir: Vec3, roughness: f64) -> [f64; 3] {
        let d = match dir.normalized(1e-12) {
            Some(d) => d,
            None => return [0.0; 3],
        };
        let level = (roughness.clamp(0.0, 1.0)) * (self.mips.len() - 1) as f64;
        let lo = level.floor() as usize;
        let hi = (lo + 1).min(self.mips.len() - 1);
        let t = level - lo as f64;
        let a = self.sample_mip(lo, d);
        let b = self.sample_mip(hi, d);
        [
            a[0] * (1.0 - t) + b[0] * t,
            a[1] * (1.0 - t) + b[1] * t,
            a[2] * (1.0 - t) + b[2] * t,
        ]
    }

    fn sample_mip(&self, level: usize, d: Vec3) -> [f64; 3] {
        let img = &self.mips[level];
        // Equirectangular: u from the xz azimuth, v from the polar angle
        // off +y (v = 0 is up).
        let u = (d.z.atan2(d.x) + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        let v = d.y.clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
        let x = u * img.width as f64;
        let y = v * img.height as f64;
        // Horizontal wrap via duplicated lookup, vertical clamp.
        let px = if x < 0.5 || x > img.width as f64 - 0.5 {
            img.bilinear(x.rem_euclid(img.width as f64).max(0.5), y)
        } else {
            img.bilinear(x, y)
        };
        [px[0] as f64, px[1] as f64, px[2] as f64]
    }
}
