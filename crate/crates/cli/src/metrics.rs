//! Kernel-shape statistics.

use thiserror::Error;

use splat_render::GaussianKernel;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("anisotropy metric needs at least one kernel")]
    Empty,
}

/// Mean excess of the major-to-middle axis ratio over the threshold `a`:
/// `(1/|P|) sum max(S1/S2 - a, 0)`. The minor axis is deliberately
/// unconstrained (it carries the shading normal).
pub fn anisotropy_metric(kernels: &[GaussianKernel], a: f64) -> Result<f64, MetricsError> {
    if kernels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: f64 = kernels
        .iter()
        .map(|k| (k.scaling[0] / k.scaling[1] - a).max(0.0))
        .sum();
    Ok(total / kernels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use splat_core::math::Vec3;

    #[test]
    fn spherical_kernels_score_zero() {
        let kernels: Vec<GaussianKernel> = (0..5)
            .map(|i| GaussianKernel::sphere(Vec3::new(i as f64, 0.0, 0.0), 0.1))
            .collect();
        assert_eq!(anisotropy_metric(&kernels, 1.1).unwrap(), 0.0);
    }

    #[test]
    fn elongated_kernel_scores_excess_and_ignores_minor_axis() {
        let mut k = GaussianKernel::sphere(Vec3::ZERO, 1.0);
        k.scaling = [2.1, 1.0, 0.01];
        let m = anisotropy_metric(&[k], 1.1).unwrap();
        assert!((m - 1.0).abs() < 1e-12, "metric {m}");
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(anisotropy_metric(&[], 1.1).is_err());
    }
}
