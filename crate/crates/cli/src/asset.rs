//! Kernel assets: ASCII point records, one kernel per line, so desk-scale
//! scenes can be authored by hand.
//!
//! Record layout (whitespace-separated, `#` starts a comment):
//!
//! ```text
//! cx cy cz  qw qx qy qz  s1 s2 s3  opacity  dr dg db  sr sg sb  rough  nx ny nz
//! ```
//!
//! Quaternion and normal are renormalized on load; everything else must
//! satisfy the kernel invariants as written.

use std::path::Path;

use thiserror::Error;

use splat_core::math::{Quat, Vec3};
use splat_render::GaussianKernel;

pub const FIELDS_PER_RECORD: usize = 21;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

pub fn load_kernels(path: &Path) -> Result<Vec<GaussianKernel>, AssetError> {
    let text = std::fs::read_to_string(path)?;
    parse_kernels(&text)
}

pub fn parse_kernels(text: &str) -> Result<Vec<GaussianKernel>, AssetError> {
    let mut kernels = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| AssetError::Record {
                    line: line_no + 1,
                    message: format!("bad number {t:?}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if fields.len() != FIELDS_PER_RECORD {
            return Err(AssetError::Record {
                line: line_no + 1,
                message: format!(
                    "expected {FIELDS_PER_RECORD} fields, got {}",
                    fields.len()
                ),
            });
        }
        let kernel = GaussianKernel {
            center: Vec3::new(fields[0], fields[1], fields[2]),
            rotation: Quat::new(fields[3], fields[4], fields[5], fields[6]).normalized(),
            scaling: [fields[7], fields[8], fields[9]],
            opacity: fields[10],
            diffuse: [fields[11], fields[12], fields[13]],
            specular: [fields[14], fields[15], fields[16]],
            roughness: fields[17],
            normal: Vec3::new(fields[18], fields[19], fields[20])
                .normalized(1e-12)
                .ok_or_else(|| AssetError::Record {
                    line: line_no + 1,
                    message: "normal must be non-zero".into(),
                })?,
        };
        kernel.validate().map_err(|e| AssetError::Record {
            line: line_no + 1,
            message: e.to_string(),
        })?;
        kernels.push(kernel);
    }
    Ok(kernels)
}

pub fn write_kernels(path: &Path, kernels: &[GaussianKernel]) -> Result<(), AssetError> {
    let mut text = String::from(
        "# cx cy cz qw qx qy qz s1 s2 s3 opacity dr dg db sr sg sb rough nx ny nz\n",
    );
    for k in kernels {
        let f = [
            k.center.x,
            k.center.y,
            k.center.z,
            k.rotation.w,
            k.rotation.x,
            k.rotation.y,
            k.rotation.z,
            k.scaling[0],
            k.scaling[1],
            k.scaling[2],
            k.opacity,
            k.diffuse[0],
            k.diffuse[1],
            k.diffuse[2],
            k.specular[0],
            k.specular[1],
            k.specular[2],
            k.roughness,
            k.normal.x,
            k.normal.y,
            k.normal.z,
        ];
        let line: Vec<String> = f.iter().map(|v| format!("{v}")).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# header\n0 0 0  1 0 0 0  0.3 0.2 0.1  0.8  0.5 0.4 0.3  1 1 1  0.2  0 0 1\n";
        let kernels = parse_kernels(text).unwrap();
        assert_eq!(kernels.len(), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.txt");
        write_kernels(&path, &kernels).unwrap();
        let back = load_kernels(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].scaling, kernels[0].scaling);
        assert_eq!(back[0].opacity, kernels[0].opacity);
    }

    #[test]
    fn unsorted_scalings_name_the_line() {
        let text = "0 0 0  1 0 0 0  0.1 0.2 0.3  0.8  0.5 0.4 0.3  1 1 1  0.2  0 0 1\n";
        let err = parse_kernels(text).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn quaternion_is_renormalized() {
        let text = "0 0 0  2 0 0 0  0.3 0.2 0.1  1.0  0 0 0  0 0 0  1.0  0 1 0\n";
        let kernels = parse_kernels(text).unwrap();
        assert!((kernels[0].rotation.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_field_count_is_rejected() {
        let text = "0 0 0 1 0 0 0\n";
        assert!(parse_kernels(text).is_err());
    }
}
