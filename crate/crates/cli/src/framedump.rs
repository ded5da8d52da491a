//! Versioned binary frame dumps, fixed little-endian layout:
//!
//! ```text
//! magic "SPLF" | version u32 | frame_index u64
//! n_particles u64 | n_foam u64 | n_kernels u64
//! particles: position 3xf64, velocity 3xf64, kind u32, surface u8   (53 B)
//! foam:      position 3xf64, velocity 3xf64, class u8, lifetime f64 (57 B)
//! kernels:   center 3xf64, rotation wxyz 4xf64, scaling 3xf64,
//!            normal 3xf64                                          (104 B)
//! ```
//!
//! `kind` is `0xFFFF_FFFF` for fluid particles, otherwise the body id.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use splat_core::math::{Quat, Vec3};
use splat_render::foam::{FoamClass, FoamParticle};

pub const DUMP_MAGIC: [u8; 4] = *b"SPLF";
pub const DUMP_VERSION: u32 = 1;
pub const HEADER_BYTES: u64 = 4 + 4 + 8 + 8 + 8 + 8;
pub const PARTICLE_RECORD_BYTES: u64 = 6 * 8 + 4 + 1;
pub const FOAM_RECORD_BYTES: u64 = 6 * 8 + 1 + 8;
pub const KERNEL_RECORD_BYTES: u64 = 13 * 8;

pub const FLUID_KIND: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a frame dump (bad magic)")]
    BadMagic,
    #[error("frame dump version {0} unsupported (expected {DUMP_VERSION})")]
    Version(u32),
    #[error("frame dump truncated")]
    Truncated,
    #[error("bad enum value {value} for {what}")]
    BadValue { what: &'static str, value: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleRecord {
    pub position: Vec3,
    pub velocity: Vec3,
    /// `FLUID_KIND` for fluid, otherwise the solid body id.
    pub kind: u32,
    pub surface: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTransform {
    pub center: Vec3,
    pub rotation: Quat,
    pub scaling: [f64; 3],
    pub normal: Vec3,
}

/// One simulation frame on disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDump {
    pub frame_index: u64,
    pub particles: Vec<ParticleRecord>,
    pub foam: Vec<FoamRecord>,
    pub kernels: Vec<KernelTransform>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoamRecord {
    pub position: Vec3,
    pub velocity: Vec3,
    pub class: u8,
    pub lifetime: f64,
}

impl FoamRecord {
    pub fn from_particle(p: &FoamParticle) -> Self {
        FoamRecord {
            position: p.position,
            velocity: p.velocity,
            class: match p.class {
                FoamClass::Spray => 0,
                FoamClass::Foam => 1,
                FoamClass::Bubble => 2,
            },
            lifetime: p.lifetime,
        }
    }

    pub fn to_particle(self) -> Result<FoamParticle, DumpError> {
        let class = match self.class {
            0 => FoamClass::Spray,
            1 => FoamClass::Foam,
            2 => FoamClass::Bubble,
            other => {
                return Err(DumpError::BadValue { what: "foam class", value: other as u64 })
            }
        };
        Ok(FoamParticle {
            position: self.position,
            velocity: self.velocity,
            class,
            lifetime: self.lifetime,
        })
    }
}

impl FrameDump {
    /// Exact on-disk size in bytes for the declared record counts.
    pub fn encoded_size(n_particles: u64, n_foam: u64, n_kernels: u64) -> u64 {
        HEADER_BYTES
            + n_particles * PARTICLE_RECORD_BYTES
            + n_foam * FOAM_RECORD_BYTES
            + n_kernels * KERNEL_RECORD_BYTES
    }

    pub fn write(&self, path: &Path) -> Result<(), DumpError> {
        let mut buf = Vec::with_capacity(
            Self::encoded_size(
                self.particles.len() as u64,
                self.foam.len() as u64,
                self.kernels.len() as u64,
            ) as usize,
        );
        buf.extend_from_slice(&DUMP_MAGIC);
        buf.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.frame_index.to_le_bytes());
        buf.extend_from_slice(&(self.particles.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.foam.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.kernels.len() as u64).to_le_bytes());

        let put_vec3 = |buf: &mut Vec<u8>, v: Vec3| {
            buf.extend_from_slice(&v.x.to_le_bytes());
            buf.extend_from_slice(&v.y.to_le_bytes());
            buf.extend_from_slice(&v.z.to_le_bytes());
        };
        for p in &self.particles {
            put_vec3(&mut buf, p.position);
            put_vec3(&mut buf, p.velocity);
            buf.extend_from_slice(&p.kind.to_le_bytes());
            buf.push(p.surface as u8);
        }
        for f in &self.foam {
            put_vec3(&mut buf, f.position);
            put_vec3(&mut buf, f.velocity);
            buf.push(f.class);
            buf.extend_from_slice(&f.lifetime.to_le_bytes());
        }
        for k in &self.kernels {
            put_vec3(&mut buf, k.center);
            for c in [k.rotation.w, k.rotation.x, k.rotation.y, k.rotation.z] {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            for c in k.scaling {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            put_vec3(&mut buf, k.normal);
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<FrameDump, DumpError> {
        let mut reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut scratch8 = [0u8; 8];
        let mut scratch4 = [0u8; 4];
        let mut scratch1 = [0u8; 1];

        macro_rules! read_exact {
            ($buf:expr) => {
                reader.read_exact($buf).map_err(|e| {
                    if e.kind() == std::io::ErrorKind::UnexpectedEof {
                        DumpError::Truncated
                    } else {
                        DumpError::Io(e)
                    }
                })?
            };
        }

        read_exact!(&mut scratch4);
        if scratch4 != DUMP_MAGIC {
            return Err(DumpError::BadMagic);
        }
        read_exact!(&mut scratch4);
        let version = u32::from_le_bytes(scratch4);
        if version != DUMP_VERSION {
            return Err(DumpError::Version(version));
        }
        read_exact!(&mut scratch8);
        let frame_index = u64::from_le_bytes(scratch8);
        read_exact!(&mut scratch8);
        let n_particles = u64::from_le_bytes(scratch8) as usize;
        read_exact!(&mut scratch8);
        let n_foam = u64::from_le_bytes(scratch8) as usize;
        read_exact!(&mut scratch8);
        let n_kernels = u64::from_le_bytes(scratch8) as usize;

        macro_rules! read_f64 {
            () => {{
                read_exact!(&mut scratch8);
                f64::from_le_bytes(scratch8)
            }};
        }
        macro_rules! read_vec3 {
            () => {{
                let x = read_f64!();
                let y = read_f64!();
                let z = read_f64!();
                Vec3::new(x, y, z)
            }};
        }

        let mut particles = Vec::with_capacity(n_particles);
        for _ in 0..n_particles {
            let position = read_vec3!();
            let velocity = read_vec3!();
            read_exact!(&mut scratch4);
            let kind = u32::from_le_bytes(scratch4);
            read_exact!(&mut scratch1);
            particles.push(ParticleRecord {
                position,
                velocity,
                kind,
                surface: scratch1[0] != 0,
            });
        }
        let mut foam = Vec::with_capacity(n_foam);
        for _ in 0..n_foam {
            let position = read_vec3!();
            let velocity = read_vec3!();
            read_exact!(&mut scratch1);
            let class = scratch1[0];
            let lifetime = read_f64!();
            foam.push(FoamRecord { position, velocity, class, lifetime });
        }
        let mut kernels = Vec::with_capacity(n_kernels);
        for _ in 0..n_kernels {
            let center = read_vec3!();
            let rotation = Quat::new(read_f64!(), read_f64!(), read_f64!(), read_f64!());
            let scaling = [read_f64!(), read_f64!(), read_f64!()];
            let normal = read_vec3!();
            kernels.push(KernelTransform { center, rotation, scaling, normal });
        }

        Ok(FrameDump { frame_index, particles, foam, kernels })
    }
}

/// Canonical dump filename for a frame index.
pub fn frame_file_name(index: u64) -> String {
    format!("frame_{index:05}.bin")
}
