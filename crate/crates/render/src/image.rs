use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad image data: {0}")]
    Format(String),
}

/// Linear RGB image, `f32` per channel, row-major top-to-bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f32; 3]>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize) -> Self {
        ImageRgb { width, height, data: vec![[0.0; 3]; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: [f32; 3]) -> Self {
        ImageRgb { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f32; 3]) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample at pixel coordinates, clamped to the border.
    pub fn bilinear(&self, x: f64, y: f64) -> [f32; 3] {
        bilinear(&self.data, self.width, self.height, x, y)
    }
}

/// Bilinear interpolation over a row-major RGB buffer with border clamp.
pub fn bilinear(data: &[[f32; 3]], width: usize, height: usize, x: f64, y: f64) -> [f32; 3] {
    let xf = (x - 0.5).clamp(0.0, (width - 1) as f64);
    let yf = (y - 0.5).clamp(0.0, (height - 1) as f64);
    let x0 = xf.floor() as usize;
    let y0 = yf.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let tx = (xf - x0 as f64) as f32;
    let ty = (yf - y0 as f64) as f32;
    let mut out = [0.0f32; 3];
    for c in 0..3 {
        let top = data[y0 * width + x0][c] * (1.0 - tx) + data[y0 * width + x1][c] * tx;
        let bot = data[y1 * width + x0][c] * (1.0 - tx) + data[y1 * width + x1][c] * tx;
        out[c] = top * (1.0 - ty) + bot * ty;
    }
    out
}

/// Same bilinear sample over a scalar buffer.
pub fn bilinear_scalar(data: &[f32], width: usize, height: usize, x: f64, y: f64) -> f32 {
    let xf = (x - 0.5).clamp(0.0, (width - 1) as f64);
    let yf = (y - 0.5).clamp(0.0, (height - 1) as f64);
    let x0 = xf.floor() as usize;
    let y0 = yf.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let tx = (xf - x0 as f64) as f32;
    let ty = (yf - y0 as f64) as f32;
    let top = data[y0 * width + x0] * (1.0 - tx) + data[y0 * width + x1] * tx;
    let bot = data[y1 * width + x0] * (1.0 - tx) + data[y1 * width + x1] * tx;
    top * (1.0 - ty) + bot * ty
}

/// Write binary PPM (P6, 8-bit). `gamma` applies the 1/2.2 display curve;
/// the byte mapping is fixed so output is bit-exact across runs.
pub fn write_ppm(path: &Path, image: &ImageRgb, gamma: bool) -> Result<(), ImageError> {
    let mut out = Vec::with_capacity(image.width * image.height * 3 + 32);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", image.width, image.height).as_bytes());
    for px in &image.data {
        for c in 0..3 {
            let v = px[c].clamp(0.0, 1.0);
            let v = if gamma { v.powf(1.0 / 2.2) } else { v };
            out.push((v * 255.0).round() as u8);
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Read binary PPM (P6, maxval 255) into linear values in `[0, 1]`.
pub fn read_ppm(path: &Path) -> Result<ImageRgb, ImageError> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut header = Vec::new();
    // magic, width, height, maxval tokens, skipping comments
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 {
        header.clear();
        reader.read_until(b'\n', &mut header)?;
        if header.is_empty() {
            return Err(ImageError::Format("truncated ppm header".into()));
        }
        let line = String::from_utf8_lossy(&header);
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(|s| s.to_string()));
    }
    if tokens[0] != "P6" {
        return Err(ImageError::Format(format!("expected P6, got {}", tokens[0])));
    }
    let width: usize = tokens[1]
        .parse()
        .map_err(|_| ImageError::Format("bad width".into()))?;
    let height: usize = tokens[2]
        .parse()
        .map_err(|_| ImageError::Format("bad height".into()))?;
    let maxval: usize = tokens[3]
        .parse()
        .map_err(|_| ImageError::Format("bad maxval".into()))?;
    if maxval != 255 {
        return Err(ImageError::Format(format!("only maxval 255 supported, got {maxval}")));
    }
    let mut raw = vec![0u8; width * height * 3];
    reader.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(3)
        .map(|c| {
            [
                c[0] as f32 / 255.0,
                c[1] as f32 / 255.0,
                c[2] as f32 / 255.0,
            ]
        })
        .collect();
    Ok(ImageRgb { width, height, data })
}

/// Read a portable float map (`PF`, color). PFM stores rows bottom-to-top;
/// this flips to the project's top-down convention.
pub fn read_pfm(path: &Path) -> Result<ImageRgb, ImageError> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut tokens: Vec<String> = Vec::new();
    let mut line = Vec::new();
    while tokens.len() < 4 {
        line.clear();
        reader.read_until(b'\n', &mut line)?;
        if line.is_empty() {
            return Err(ImageError::Format("truncated pfm header".into()));
        }
        let text = String::from_utf8_lossy(&line);
        let text = text.split('#').next().unwrap_or("");
        tokens.extend(text.split_whitespace().map(|s| s.to_string()));
    }
    if tokens[0] != "PF" {
        return Err(ImageError::Format(format!("expected PF, got {}", tokens[0])));
    }
    let width: usize = tokens[1]
        .parse()
        .map_err(|_| ImageError::Format("bad width".into()))?;
    let height: usize = tokens[2]
        .parse()
        .map_err(|_| ImageError::Format("bad height".into()))?;
    let scale: f32 = tokens[3]
        .parse()
        .map_err(|_| ImageError::Format("bad scale".into()))?;
    let little_endian = scale < 0.0;
    let magnitude = scale.abs();

    let mut raw = vec![0u8; width * height * 3 * 4];
    reader.read_exact(&mut raw)?;
    let mut data = vec![[0.0f32; 3]; width * height];
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        } * magnitude;
        let px = i / 3;
        let row = px / width; // bottom-to-top in the file
        let col = px % width;
        data[(height - 1 - row) * width + col][i % 3] = v;
    }
    Ok(ImageRgb { width, height, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip_is_exact() {
        let mut img = ImageRgb::new(4, 3);
        for (i, px) in img.data.iter_mut().enumerate() {
            *px = [
                (i as f32 / 11.0).min(1.0),
                ((11 - i) as f32 / 11.0).min(1.0),
                0.25,
            ];
        }
        let dir = std::env::temp_dir().join("splat_render_ppm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("round.ppm");
        write_ppm(&path, &img, false).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!(back.width, 4);
        assert_eq!(back.height, 3);
        // 8-bit quantization only
        for (a, b) in img.data.iter().zip(back.data.iter()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-6);
            }
        }
    }

    #[test]
    fn pfm_reader_flips_rows() {
        let dir = std::env::temp_dir().join("splat_render_pfm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.pfm");
        // 1x2 image: bottom row red, top row green.
        let mut bytes = b"PF\n1 2\n-1.0\n".to_vec();
        for v in [1.0f32, 0.0, 0.0, 0.0, 1.0, 0.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        let img = read_pfm(&path).unwrap();
        assert_eq!(img.get(0, 0), [0.0, 1.0, 0.0]); // top = green
        assert_eq!(img.get(0, 1), [1.0, 0.0, 0.0]); // bottom = red
    }

    #[test]
    fn bilinear_center_is_exact_and_border_clamps() {
        let mut img = ImageRgb::new(2, 1);
        img.set(0, 0, [0.0, 0.0, 0.0]);
        img.set(1, 0, [1.0, 1.0, 1.0]);
        let mid = img.bilinear(1.0, 0.5);
        assert!((mid[0] - 0.5).abs() < 1e-6);
        let outside = img.bilinear(-5.0, 0.5);
        assert_eq!(outside, [0.0, 0.0, 0.0]);
    }
}
