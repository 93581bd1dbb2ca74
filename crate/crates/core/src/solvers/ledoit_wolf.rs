//! Ledoit-Wolf shrinkage toward a scaled identity.
//!
//! `C = pi T + (1 - pi) U` with `U` the unbiased sample covariance,
//! `T = (tr(U) / p) I` and
//! `pi = sum_ij Var(u_ij) / sum_ij (u_ij - t_ij)^2`, clamped to `[0, 1]`.
//! `Var(u_ij)` is estimated by `(1 / n^2) sum_k (x_ki x_kj - u_ij)^2` over
//! the centered samples.

use std::time::Instant;

use ndarray::{Array2, Axis};

use super::{objective_covariance, EstimateKind, SolverResult};
use crate::error::{Error, Result};
use crate::numerics::SymMatrix;

#[derive(Debug, Clone)]
pub struct LedoitWolfFit {
    pub covariance: SymMatrix,
    pub sample_covariance: SymMatrix,
    pub target_scale: f64,
    pub shrinkage: f64,
}

/// Fits the shrinkage estimator to an `n x p` sample matrix.
pub fn shrinkage_intensity(data: &Array2<f64>) -> Result<LedoitWolfFit> {
    let (n, p) = data.dim();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if p == 0 {
        return Err(Error::InvalidArgument("data has no columns".into()));
    }
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }

    let means = data.sum_axis(Axis(0)) / n as f64;
    let x = data - &means.insert_axis(Axis(0));
    let u = x.t().dot(&x) / (n - 1) as f64;
    let trace = u.diag().sum();
    if !(trace > 0.0) {
        return Err(Error::DegenerateData);
    }
    let mu = trace / p as f64;

    let mut dispersion = 0.0;
    for i in 0..p {
        for j in 0..p {
            let t = if i == j { mu } else { 0.0 };
            dispersion += (u[[i, j]] - t).powi(2);
        }
    }

    let mut variance = 0.0;
    for row in x.rows() {
        for i in 0..p {
            let xi = row[i];
            for j in 0..p {
                variance += (xi * row[j] - u[[i, j]]).powi(2);
            }
        }
    }
    variance /= (n * n) as f64;

    let shrinkage = if dispersion > 0.0 {
        (variance / dispersion).clamp(0.0, 1.0)
    } else {
        // U already equals the target.
        1.0
    };

    let mut cov = &u * (1.0 - shrinkage);
    for i in 0..p {
        cov[[i, i]] += shrinkage * mu;
    }
    Ok(LedoitWolfFit {
        covariance: SymMatrix::from_array(cov)?,
        sample_covariance: SymMatrix::from_array(u)?,
        target_scale: mu,
        shrinkage,
    })
}

/// Ledoit-Wolf covariance estimate wrapped as a [`SolverResult`].
///
/// The reported objective is the unpenalized covariance-form likelihood
/// `log det(C) + tr(U C^-1)`.
pub fn ledoit_wolf(data: &Array2<f64>) -> Result<SolverResult> {
    let start = Instant::now();
    let fit = shrinkage_intensity(data)?;
    let objective = objective_covariance(&fit.covariance, &fit.sample_covariance, 0.0)?;
    Ok(SolverResult {
        estimate: fit.covariance,
        estimate_kind: EstimateKind::Covariance,
        objective,
        iterations: 1,
        converged: true,
        wall_time: start.elapsed().as_secs_f64(),
        objective_history: vec![objective],
        shrinkage: Some(fit.shrinkage),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_data(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn large_sample_recovers_identity() {
        let data = normal_data(100_000, 4, 1);
        let r = ledoit_wolf(&data).unwrap();
        let err = r.estimate.sub(&SymMatrix::identity(4)).frobenius_norm() / 2.0;
        assert!(err < 0.02, "relative error {err}");
    }

    #[test]
    fn rank_deficient_sample_is_rescued() {
        let data = normal_data(2, 50, 3);
        let r = ledoit_wolf(&data).unwrap();
        let pi = r.shrinkage.unwrap();
        assert!(pi > 0.0 && pi <= 1.0);
        assert!(r.estimate.min_eigenvalue() > 0.0);
        assert!(r.estimate.is_positive_definite());
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let data = Array2::from_shape_fn((5, 3), |(_, j)| j as f64 + 0.5);
        assert!(matches!(ledoit_wolf(&data), Err(Error::DegenerateData)));
        assert!(matches!(
            ledoit_wolf(&Array2::zeros((4, 2))),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            ledoit_wolf(&Array2::ones((1, 3))),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn intensity_shrinks_with_sample_size() {
        let mut data = normal_data(100_000, 5, 17);
        for (j, mut col) in data.columns_mut().into_iter().enumerate() {
            col *= (j + 1) as f64;
        }
        let small = shrinkage_intensity(&data.slice(ndarray::s![..50, ..]).to_owned()).unwrap();
        let large = shrinkage_intensity(&data).unwrap();
        assert!(large.shrinkage < small.shrinkage);
    }
}
