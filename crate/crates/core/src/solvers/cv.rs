//! K-fold cross-validation of the penalty weight.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{solve_penalized, SolverConfig, SolverKind};
use crate::error::{Error, Result};
use crate::numerics::{sample_covariance, SymMatrix};

/// How the penalty weight is picked before the final fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed { lambda: f64 },
    CrossValidated { folds: usize, grid: Vec<f64> },
}

impl Default for LambdaPolicy {
    /// 5-fold CV over 10 log-spaced points in `[0.01, 1]`.
    fn default() -> Self {
        LambdaPolicy::CrossValidated {
            folds: 5,
            grid: log_lambda_grid(0.01, 1.0, 10),
        }
    }
}

/// Training and held-out covariance matrices for one fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: SymMatrix,
    pub test: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub lambda: f64,
    /// Ascending grid actually evaluated.
    pub grid: Vec<f64>,
    /// Mean held-out log-likelihood per grid point.
    pub mean_scores: Vec<f64>,
    /// `fold_scores[g][f]`: score of grid point `g` on fold `f`.
    pub fold_scores: Vec<Vec<f64>>,
}

/// Splits the rows of `data` into `k` contiguous folds.
pub fn kfold_covariances(data: &Array2<f64>, k: usize) -> Result<Vec<Fold>> {
    let n = data.nrows();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if n < 2 * k {
        return Err(Error::TooFewSamples {
            needed: 2 * k,
            got: n,
        });
    }
    (0..k)
        .map(|f| {
            let lo = f * n / k;
            let hi = (f + 1) * n / k;
            let test = data.slice(s![lo..hi, ..]).to_owned();
            let mut train = Array2::zeros((n - (hi - lo), data.ncols()));
            train
                .slice_mut(s![..lo, ..])
                .assign(&data.slice(s![..lo, ..]));
            train
                .slice_mut(s![lo.., ..])
                .assign(&data.slice(s![hi.., ..]));
            Ok(Fold {
                train: sample_covariance(&train),
                test: sample_covariance(&test),
            })
        })
        .collect()
}

/// `n` points log-spaced from `lo` to `hi`, inclusive.
pub fn log_lambda_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Held-out Gaussian log-likelihood `log det(T) - tr(S_test T)` up to constants.
fn held_out_score(precision: &SymMatrix, test: &SymMatrix) -> Result<f64> {
    Ok(precision.log_det()? - test.trace_product(precision))
}

/// Picks the penalty maximizing the mean held-out log-likelihood.
///
/// Ties go to the larger penalty. A fit that fails on a fold scores
/// negative infinity there.
pub fn cross_validate_lambda(
    folds: &[Fold],
    lambda_grid: &[f64],
    solver: SolverKind,
    base: &SolverConfig,
) -> Result<CvOutcome> {
    if lambda_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if folds.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {}",
            folds.len()
        )));
    }
    if !solver.is_penalized() {
        return Err(Error::InvalidArgument(format!(
            "{solver} has no penalty to tune"
        )));
    }
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let mut fold_scores = Vec::with_capacity(grid.len());
    let mut mean_scores = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let cfg = base.with_lambda(lambda);
        let scores: Vec<f64> = folds
            .iter()
            .map(|fold| {
                solve_penalized(solver, &fold.train, &cfg)
                    .and_then(|r| r.precision())
                    .and_then(|theta| held_out_score(&theta, &fold.test))
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        mean_scores.push(scores.iter().sum::<f64>() / scores.len() as f64);
        fold_scores.push(scores);
    }

    let mut best = 0;
    for (g, &score) in mean_scores.iter().enumerate() {
        if score >= mean_scores[best] {
            best = g;
        }
    }
    Ok(CvOutcome {
        lambda: grid[best],
        grid,
        mean_scores,
        fold_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn data(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn single_point_grid() {
        let folds = kfold_covariances(&data(60, 3, 1), 3).unwrap();
        let out = cross_validate_lambda(
            &folds,
            &[0.25],
            SolverKind::Glasso,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(out.lambda, 0.25);
        assert_eq!(out.mean_scores.len(), 1);
    }

    #[test]
    fn empty_grid_errors() {
        let folds = kfold_covariances(&data(60, 3, 1), 3).unwrap();
        assert!(matches!(
            cross_validate_lambda(&folds, &[], SolverKind::Glasso, &SolverConfig::default()),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn identical_folds_score_identically() {
        let fold = kfold_covariances(&data(40, 4, 2), 2).unwrap().remove(0);
        let folds = vec![fold.clone(), fold.clone(), fold];
        let out = cross_validate_lambda(
            &folds,
            &[0.01, 0.1, 1.0],
            SolverKind::Glasso,
            &SolverConfig::default(),
        )
        .unwrap();
        for scores in &out.fold_scores {
            assert!(scores.iter().all(|&s| s == scores[0]));
        }
    }

    #[test]
    fn ties_prefer_larger_lambda() {
        // Any lambda above the largest off-diagonal leaves a diagonal fit
        // whose held-out score only depends on the diagonal shrinkage, so
        // use a diagonal covariance where lambda only enters on the diagonal
        // and duplicate the grid value.
        let folds = kfold_covariances(&data(40, 3, 5), 2).unwrap();
        let out = cross_validate_lambda(
            &folds,
            &[0.05, 0.05],
            SolverKind::Glasso,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(out.lambda, 0.05);
        assert_eq!(out.mean_scores[0], out.mean_scores[1]);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_lambda_grid(0.01, 1.0, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[9] - 1.0).abs() < 1e-12);
        let ratio = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-9));
    }

    #[test]
    fn folds_partition_rows() {
        assert!(kfold_covariances(&data(5, 2, 1), 3).is_err());
        assert!(kfold_covariances(&data(50, 2, 1), 1).is_err());
        assert_eq!(kfold_covariances(&data(50, 2, 1), 5).unwrap().len(), 5);
    }
}
