//! Dense symmetric and Hermitian matrix kernels.
//!
//! Matrices in this crate are small (a few hundred rows at most), so every
//! routine works on dense row-major storage. Positive definiteness is
//! detected through Cholesky failure.

mod herm;
mod sym;

pub use herm::HermMatrix;
pub use sym::{Eigen, SymMatrix};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Relative Frobenius error allowed when reconstructing from a Cholesky factor.
    pub const CHOLESKY_RECONSTRUCTION: f64 = 1e-10;
    /// Max-entry error of `a * a^-1` against the identity.
    pub const INVERSE_RESIDUAL: f64 = 1e-8;
    /// Off-diagonal mass below which the Jacobi sweep stops, relative to the matrix norm.
    pub const JACOBI_OFFDIAG: f64 = 1e-15;
    /// Jacobi sweeps before giving up on further rotation.
    pub const JACOBI_MAX_SWEEPS: usize = 100;
    /// Relative PSD slack for spectral density matrices.
    pub const PSD_RELATIVE: f64 = 1e-8;
}

/// Proximal operator of `t * |x|`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Maximum likelihood covariance (divisor `n`) of an `n x p` data matrix
/// after removing column means.
pub fn sample_covariance(data: &ndarray::Array2<f64>) -> SymMatrix {
    let (n, p) = data.dim();
    let means = data.sum_axis(ndarray::Axis(0)) / n as f64;
    let centered = data - &means.insert_axis(ndarray::Axis(0));
    let cov = centered.t().dot(&centered) / n as f64;
    debug_assert_eq!(cov.nrows(), p);
    SymMatrix::from_array_unchecked(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        for x in [-2.5, -1e-300, 0.0, 7.25, 1e12] {
            assert_eq!(soft_threshold(x, 0.0), x);
        }
    }

    proptest! {
        #[test]
        fn soft_threshold_is_a_contraction(x in -1e3f64..1e3, y in -1e3f64..1e3, t in 0f64..10.0) {
            let d = (soft_threshold(x, t) - soft_threshold(y, t)).abs();
            prop_assert!(d <= (x - y).abs() + 1e-12);
        }
    }
}
