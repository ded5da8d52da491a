//! Compact-support cubic kernel used for particle density integration.
//!
//! With `q = |p| / r`:
//!
//! ```text
//! W(p, r) = 8/(pi r^3) * (6 q^2 (q - 1) + 1)   for 0   <= q <= 0.5
//!           16/(pi r^3) * (1 - q)^3            for 0.5 <  q <= 1
//!           0                                  otherwise
//! ```
//!
//! The gradient follows the same piecewise split and vanishes at `p = 0`
//! and outside the support.

use std::f64::consts::PI;

use super::{MathError, Vec3};

/// Cubic kernel with support radius `r`; precomputes the normalizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphKernel {
    radius: f64,
    sigma: f64,      // 8 / (pi r^3)
    grad_sigma: f64, // 48 / (pi r^5)
}

impl SphKernel {
    pub fn new(radius: f64) -> Result<Self, MathError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(MathError::InvalidRadius(radius));
        }
        Ok(SphKernel {
            radius,
            sigma: 8.0 / (PI * radius.powi(3)),
            grad_sigma: 48.0 / (PI * radius.powi(5)),
        })
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Kernel value; errors on non-finite input.
    pub fn value(&self, p: Vec3) -> Result<f64, MathError> {
        if !p.is_finite() {
            return Err(MathError::NonFinite("sph kernel point"));
        }
        Ok(self.value_unchecked(p))
    }

    /// Kernel gradient; errors on non-finite input.
    pub fn gradient(&self, p: Vec3) -> Result<Vec3, MathError> {
        if !p.is_finite() {
            return Err(MathError::NonFinite("sph kernel point"));
        }
        Ok(self.gradient_unchecked(p))
    }

    /// Value without the finiteness check, for inner loops whose positions
    /// are validated once per step.
    #[inline]
    pub fn value_unchecked(&self, p: Vec3) -> f64 {
        let q = p.norm() / self.radius;
        if q <= 0.5 {
            self.sigma * (6.0 * q * q * (q - 1.0) + 1.0)
        } else if q <= 1.0 {
            let u = 1.0 - q;
            2.0 * self.sigma * u * u * u
        } else {
            0.0
        }
    }

    /// Gradient without the finiteness check.
    #[inline]
    pub fn gradient_unchecked(&self, p: Vec3) -> Vec3 {
        let n = p.norm();
        let q = n / self.radius;
        if n == 0.0 || q > 1.0 {
            Vec3::ZERO
        } else if q <= 0.5 {
            p * (self.grad_sigma * (3.0 * q - 2.0))
        } else {
            let u = 1.0 - q;
            p * (-self.grad_sigma * u * u / q)
        }
    }
}
