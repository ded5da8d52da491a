use std::ops::{Add, AddAssign, Mul, Sub};

use super::{Quat, Vec3};

/// 3x3 matrix, row-major storage, column-vector convention (`y = m * v`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    /// Entries `m[row * 3 + col]`.
    pub m: [f64; 9],
}

impl Default for Mat3 {
    fn default() -> Self {
        Mat3::IDENTITY
    }
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { m: [0.0; 9] };
    pub const IDENTITY: Mat3 = Mat3 {
        m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    pub fn from_rows(r0: [f64; 3], r1: [f64; 3], r2: [f64; 3]) -> Self {
        Mat3 {
            m: [r0[0], r0[1], r0[2], r1[0], r1[1], r1[2], r2[0], r2[1], r2[2]],
        }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3 {
            m: [c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z],
        }
    }

    pub fn from_diagonal(d: Vec3) -> Self {
        Mat3 {
            m: [d.x, 0.0, 0.0, 0.0, d.y, 0.0, 0.0, 0.0, d.z],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.m[row * 3 + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.m[row * 3 + col] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> Vec3 {
        Vec3::new(self.m[r * 3], self.m[r * 3 + 1], self.m[r * 3 + 2])
    }

    #[inline]
    pub fn col(&self, c: usize) -> Vec3 {
        Vec3::new(self.m[c], self.m[3 + c], self.m[6 + c])
    }

    pub fn transpose(&self) -> Mat3 {
        Mat3::from_rows(
            [self.m[0], self.m[3], self.m[6]],
            [self.m[1], self.m[4], self.m[7]],
            [self.m[2], self.m[5], self.m[8]],
        )
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    pub fn trace(&self) -> f64 {
        self.m[0] + self.m[4] + self.m[8]
    }

    /// Inverse, or `None` when `|det|` falls below `eps` times the matrix scale.
    pub fn inverse(&self) -> Option<Mat3> {
        let m = &self.m;
        let c00 = m[4] * m[8] - m[5] * m[7];
        let c01 = m[5] * m[6] - m[3] * m[8];
        let c02 = m[3] * m[7] - m[4] * m[6];
        let det = m[0] * c00 + m[1] * c01 + m[2] * c02;
        let scale = self.m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if det.abs() <= 1e-14 * scale.powi(3).max(f64::MIN_POSITIVE) {
            return None;
        }
        let inv_det = 1.0 / det;
        Some(Mat3::from_rows(
            [
                c00 * inv_det,
                (m[2] * m[7] - m[1] * m[8]) * inv_det,
                (m[1] * m[5] - m[2] * m[4]) * inv_det,
            ],
            [
                c01 * inv_det,
                (m[0] * m[8] - m[2] * m[6]) * inv_det,
                (m[2] * m[3] - m[0] * m[5]) * inv_det,
            ],
            [
                c02 * inv_det,
                (m[1] * m[6] - m[0] * m[7]) * inv_det,
                (m[0] * m[4] - m[1] * m[3]) * inv_det,
            ],
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }

    /// Rotational part of the polar decomposition `M = R * S`, always a
    /// proper rotation (`det R = +1`, reflections corrected away).
    ///
    /// Iterative: rotates a quaternion guess until the residual torque of
    /// `R^T M` vanishes. `warm_start` speeds up convergence when the result
    /// changes little between calls (e.g. shape matching across steps).
    pub fn polar_rotation(&self, warm_start: Option<Quat>) -> Quat {
        let mut q = warm_start.unwrap_or(Quat::IDENTITY).normalized();
        for _ in 0..500 {
            let r = q.to_mat3();
            let mut num = Vec3::ZERO;
            let mut den = 0.0;
            for c in 0..3 {
                num += r.col(c).cross(self.col(c));
                den += r.col(c).dot(self.col(c));
            }
            let omega = num * (1.0 / (den.abs() + 1e-9));
            let angle = omega.norm();
            if angle < 1e-12 {
                break;
            }
            q = Quat::from_axis_angle(omega / angle, angle) * q;
            q = q.normalized();
        }
        q
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted in
    /// descending order and eigenvectors as the matching columns of a proper
    /// rotation (`det = +1`). Only the symmetric part of `self` is used.
    pub fn symmetric_eigen(&self) -> (Vec3, Mat3) {
        // Symmetrize defensively; callers pass A A^T-style products.
        let mut a = [
            self.m[0],
            0.5 * (self.m[1] + self.m[3]),
            0.5 * (self.m[2] + self.m[6]),
            self.m[4],
            0.5 * (self.m[5] + self.m[7]),
            self.m[8],
        ]; // packed [a00, a01, a02, a11, a12, a22]
        let mut v = Mat3::IDENTITY;

        const PAIRS: [(usize, usize, usize, usize, usize); 3] = [
            // (p, q, idx_pq, idx_pp, idx_qq) into the packed array
            (0, 1, 1, 0, 3),
            (0, 2, 2, 0, 5),
            (1, 2, 4, 3, 5),
        ];

        for _ in 0..32 {
            let off = a[1] * a[1] + a[2] * a[2] + a[4] * a[4];
            let scale = a[0].abs().max(a[3].abs()).max(a[5].abs()).max(1e-300);
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for &(p, q, ipq, ipp, iqq) in &PAIRS {
                let apq = a[ipq];
                if apq == 0.0 {
                    continue;
                }
                let app = a[ipp];
                let aqq = a[iqq];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Apply the Givens rotation J(p, q) on both sides of A.
                let mut full = Mat3::from_rows(
                    [a[0], a[1], a[2]],
                    [a[1], a[3], a[4]],
                    [a[2], a[4], a[5]],
                );
                let mut j = Mat3::IDENTITY;
                j.set(p, p, c);
                j.set(q, q, c);
                j.set(p, q, s);
                j.set(q, p, -s);
                full = j.transpose() * full * j;
                a = [
                    full.at(0, 0),
                    full.at(0, 1),
                    full.at(0, 2),
                    full.at(1, 1),
                    full.at(1, 2),
                    full.at(2, 2),
                ];
                v = v * j;
            }
        }

        let mut eig = [(a[0], 0usize), (a[3], 1usize), (a[5], 2usize)];
        eig.sort_by(|l, r| r.0.partial_cmp(&l.0).unwrap());
        let vals = Vec3::new(eig[0].0, eig[1].0, eig[2].0);
        let mut vecs = Mat3::from_cols(v.col(eig[0].1), v.col(eig[1].1), v.col(eig[2].1));
        if vecs.determinant() < 0.0 {
            // Flip the last column to keep a proper rotation.
            for r in 0..3 {
                let x = vecs.at(r, 2);
                vecs.set(r, 2, -x);
            }
        }
        (vals, vecs)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += self.at(r, k) * rhs.at(k, c);
                }
                out.set(r, c, acc);
            }
        }
        out
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: f64) -> Mat3 {
        let mut out = self;
        for v in &mut out.m {
            *v *= rhs;
        }
        out
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for (a, b) in out.m.iter_mut().zip(rhs.m.iter()) {
            *a += b;
        }
        out
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        for (a, b) in self.m.iter_mut().zip(rhs.m.iter()) {
            *a += b;
        }
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = self;
        for (a, b) in out.m.iter_mut().zip(rhs.m.iter()) {
            *a -= b;
        }
        out
    }
}
