use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error reading mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh has no triangles")]
    Empty,
    #[error("mesh is not watertight: {open_edges} edges are not shared by exactly two triangles")]
    NotWatertight { open_edges: usize },
    #[error("face index {index} out of range (mesh has {vertices} vertices)")]
    IndexOutOfRange { index: isize, vertices: usize },
}

/// Triangle mesh used as the sampling domain for solid bodies.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        TriangleMesh { vertices, triangles }
    }

    /// ASCII OBJ subset: `v x y z` and triangulated `f a b c` lines
    /// (`a/b/c` face tokens keep their first index; 1-based and negative
    /// indices supported). All other line types are ignored.
    pub fn load_obj(path: &Path) -> Result<Self, MeshError> {
        let file = std::fs::File::open(path)?;
        Self::parse_obj(std::io::BufReader::new(file))
    }

    pub fn parse_obj(reader: impl BufRead) -> Result<Self, MeshError> {
        let mut vertices: Vec<Vec3> = Vec::new();
        let mut triangles = Vec::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("v") => {
                    let mut coords = [0.0f64; 3];
                    for coord in &mut coords {
                        let tok = tokens.next().ok_or_else(|| MeshError::Parse {
                            line: line_no + 1,
                            message: "vertex needs three coordinates".into(),
                        })?;
                        *coord = tok.parse().map_err(|_| MeshError::Parse {
                            line: line_no + 1,
                            message: format!("bad coordinate {tok:?}"),
                        })?;
                    }
                    vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let idx: Vec<isize> = tokens
                        .map(|t| {
                            let first = t.split('/').next().unwrap_or(t);
                            first.parse().map_err(|_| MeshError::Parse {
                                line: line_no + 1,
                                message: format!("bad face index {t:?}"),
                            })
                        })
                        .collect::<Result<_, _>>()?;
                    if idx.len() != 3 {
                        return Err(MeshError::Parse {
                            line: line_no + 1,
                            message: format!("expected triangulated faces, got {} indices", idx.len()),
                        });
                    }
                    let mut tri = [0usize; 3];
                    for (slot, &raw) in tri.iter_mut().zip(idx.iter()) {
                        let resolved = if raw > 0 {
                            raw as usize - 1
                        } else if raw < 0 {
                            let back = vertices.len() as isize + raw;
                            if back < 0 {
                                return Err(MeshError::IndexOutOfRange {
                                    index: raw,
                                    vertices: vertices.len(),
                                });
                            }
                            back as usize
                        } else {
                            return Err(MeshError::IndexOutOfRange { index: 0, vertices: vertices.len() });
                        };
                        if resolved >= vertices.len() {
                            return Err(MeshError::IndexOutOfRange {
                                index: raw,
                                vertices: vertices.len(),
                            });
                        }
                        *slot = resolved;
                    }
                    triangles.push(tri);
                }
                _ => {}
            }
        }
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        Ok(TriangleMesh { vertices, triangles })
    }

    /// Every undirected edge must be shared by exactly two triangles.
    pub fn check_watertight(&self) -> Result<(), MeshError> {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        let open = edges.values().filter(|&&c| c != 2).count();
        if open > 0 {
            return Err(MeshError::NotWatertight { open_edges: open });
        }
        Ok(())
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::splat(f64::INFINITY);
        let mut hi = Vec3::splat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        (lo, hi)
    }

    /// Ray-crossing parity with three jittered rays, majority vote. The
    /// jitter directions are fixed, so the test is deterministic.
    pub fn contains(&self, p: Vec3) -> bool {
        // Irrational-ish directions dodge grazing hits on axis-aligned meshes.
        const DIRS: [Vec3; 3] = [
            Vec3 { x: 0.813_727_1, y: 0.402_128_3, z: 0.419_983_7 },
            Vec3 { x: -0.331_992_1, y: 0.871_128_9, z: -0.361_205_5 },
            Vec3 { x: 0.274_441_9, y: -0.489_557_2, z: 0.827_662_3 },
        ];
        let mut votes = 0;
        for dir in DIRS {
            let mut crossings = 0;
            for tri in &self.triangles {
                if ray_hits_triangle(
                    p,
                    dir,
                    self.vertices[tri[0]],
                    self.vertices[tri[1]],
                    self.vertices[tri[2]],
                ) {
                    crossings += 1;
                }
            }
            if crossings % 2 == 1 {
                votes += 1;
            }
        }
        votes >= 2
    }
}

/// Moller-Trumbore intersection, counting hits with `t > 0`.
fn ray_hits_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(qvec) * inv_det > 1e-12
}

/// Axis-aligned box as a 12-triangle mesh, for tests and scene building.
pub fn box_mesh(lo: Vec3, hi: Vec3) -> TriangleMesh {
    let v = vec![
        Vec3::new(lo.x, lo.y, lo.z),
        Vec3::new(hi.x, lo.y, lo.z),
        Vec3::new(hi.x, hi.y, lo.z),
        Vec3::new(lo.x, hi.y, lo.z),
        Vec3::new(lo.x, lo.y, hi.z),
        Vec3::new(hi.x, lo.y, hi.z),
        Vec3::new(hi.x, hi.y, hi.z),
        Vec3::new(lo.x, hi.y, hi.z),
    ];
    let t = vec![
        [0, 2, 1],
        [0, 3, 2], // z = lo
        [4, 5, 6],
        [4, 6, 7], // z = hi
        [0, 1, 5],
        [0, 5, 4], // y = lo
        [3, 6, 2],
        [3, 7, 6], // y = hi
        [0, 7, 3],
        [0, 4, 7], // x = lo
        [1, 2, 6],
        [1, 6, 5], // x = hi
    ];
    TriangleMesh::new(v, t)
}
