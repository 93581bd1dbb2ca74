//! Graphical lasso by block coordinate descent.
//!
//! The working covariance `W` starts at `S + lambda I` and its diagonal never
//! changes. Each column `j` is updated by solving the lasso
//! `min_b 1/2 b' W11 b - b' s12 + lambda |b|_1` with cyclic coordinate
//! descent, warm-started from the previous visit, then setting
//! `w12 = W11 b`. The precision matrix is read off the final coefficients,
//! which keeps exact zeros exact.

use std::time::Instant;

use ndarray::Array2;

use super::{objective_precision, EstimateKind, SolverConfig, SolverResult};
use crate::error::{Error, Result};
use crate::numerics::{soft_threshold, SymMatrix};

/// Coefficient change below which a column's coordinate descent stops.
const INNER_TOL: f64 = 1e-7;
const INNER_MAX_SWEEPS: usize = 10_000;
/// The outer loop stops once no entry of `W` moves by more than
/// `tol * W_TOL_FACTOR * mean(diag W)` over a full sweep. At the default
/// `tol` this makes `inverse(theta)` reproduce `s_ii + lambda` to ~1e-10.
const W_TOL_FACTOR: f64 = 1e-3;

/// Solves `min -log det(T) + tr(S T) + lambda |T|_1` over precision matrices.
pub fn graphical_lasso(s: &SymMatrix, cfg: &SolverConfig) -> Result<SolverResult> {
    let start = Instant::now();
    cfg.validate()?;
    if !s.is_finite() {
        return Err(Error::InvalidArgument(
            "covariance has non-finite entries".into(),
        ));
    }
    let p = s.dim();
    if let Some(i) = (0..p).find(|&i| s.get(i, i) < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "covariance diagonal entry {i} is negative"
        )));
    }
    let lambda = cfg.lambda;
    if lambda == 0.0 && !s.is_positive_definite() {
        return Err(Error::SingularInput);
    }
    if (0..p).any(|i| s.get(i, i) + lambda <= 0.0) {
        return Err(Error::SingularInput);
    }

    let mut w = s.as_array().clone();
    for i in 0..p {
        w[[i, i]] += lambda;
    }
    let scale = w.diag().sum() / p as f64;
    // beta[[k, j]]: coefficient of variable k in column j's regression.
    let mut beta = Array2::<f64>::zeros((p, p));
    let mut iterations = 0;
    let mut converged = p == 1;

    while !converged && iterations < cfg.max_outer_iters {
        iterations += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            solve_column(&w, s, lambda, j, &mut beta);
            for k in 0..p {
                if k == j {
                    continue;
                }
                let mut v = 0.0;
                for l in 0..p {
                    if l != j {
                        v += w[[k, l]] * beta[[l, j]];
                    }
                }
                max_change = max_change.max((w[[k, j]] - v).abs());
                w[[k, j]] = v;
                w[[j, k]] = v;
            }
        }
        if max_change <= cfg.tol * W_TOL_FACTOR * scale {
            converged = true;
        }
    }

    let mut theta = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut dot = 0.0;
        for k in 0..p {
            if k != j {
                dot += w[[k, j]] * beta[[k, j]];
            }
        }
        let tjj = 1.0 / (w[[j, j]] - dot);
        theta[[j, j]] = tjj;
        for k in 0..p {
            if k != j {
                theta[[k, j]] = -beta[[k, j]] * tjj;
            }
        }
    }
    // Column j's coefficients define theta[., j]; the two halves agree at
    // the fixed point and are averaged otherwise. Exact zeros stay zero only
    // when both halves vanish, so a one-sided zero is kept as zero.
    for i in 0..p {
        for j in (i + 1)..p {
            let (a, b) = (theta[[i, j]], theta[[j, i]]);
            let v = if a == 0.0 || b == 0.0 {
                0.0
            } else {
                0.5 * (a + b)
            };
            theta[[i, j]] = v;
            theta[[j, i]] = v;
        }
    }
    let theta = SymMatrix::from_array(theta)?;
    let objective = objective_precision(&theta, s, lambda)?;

    Ok(SolverResult {
        estimate: theta,
        estimate_kind: EstimateKind::Precision,
        objective,
        iterations,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        objective_history: vec![objective],
        shrinkage: None,
    })
}

/// Cyclic coordinate descent on column `j`'s lasso subproblem.
fn solve_column(w: &Array2<f64>, s: &SymMatrix, lambda: f64, j: usize, beta: &mut Array2<f64>) {
    let p = w.nrows();
    // fitted[k] = sum_{l != j} w[k, l] * beta[l, j]
    let mut fitted = vec![0.0; p];
    for k in 0..p {
        if k == j {
            continue;
        }
        let mut v = 0.0;
        for l in 0..p {
            if l != j {
                v += w[[k, l]] * beta[[l, j]];
            }
        }
        fitted[k] = v;
    }
    for _ in 0..INNER_MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for k in 0..p {
            if k == j {
                continue;
            }
            let old = beta[[k, j]];
            let partial = s.get(k, j) - (fitted[k] - w[[k, k]] * old);
            let new = soft_threshold(partial, lambda) / w[[k, k]];
            let delta = new - old;
            if delta != 0.0 {
                beta[[k, j]] = new;
                for l in 0..p {
                    if l != j {
                        fitted[l] += w[[l, k]] * delta;
                    }
                }
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < INNER_TOL {
            break;
        }
    }
}

/// Largest violation of the graphical lasso optimality conditions at `theta`.
///
/// With `W = theta^-1`, optimality requires `w_ii = s_ii + lambda`,
/// `w_ij - s_ij = lambda * sign(theta_ij)` where `theta_ij != 0` and
/// `|w_ij - s_ij| <= lambda` where `theta_ij == 0`.
pub fn kkt_residual(theta: &SymMatrix, s: &SymMatrix, lambda: f64) -> Result<f64> {
    super::check_dims(theta, s)?;
    let w = theta.invert()?;
    let p = s.dim();
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            let gap = w.get(i, j) - s.get(i, j);
            let t = theta.get(i, j);
            let violation = if i == j {
                (gap - lambda).abs()
            } else if t == 0.0 {
                (gap.abs() - lambda).max(0.0)
            } else {
                (gap - lambda * t.signum()).abs()
            };
            worst = worst.max(violation);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_cov(p: usize, seed: u64) -> SymMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((p + 3, p), |_| rng.random_range(-1.0..1.0));
        SymMatrix::from_array(a.t().dot(&a) / (p + 3) as f64).unwrap()
    }

    #[test]
    fn diagonal_input_has_closed_form() {
        let s = SymMatrix::from_diag(&[1.0, 2.0, 3.0]);
        for lambda in [0.0, 0.3, 2.0] {
            let r = graphical_lasso(&s, &SolverConfig::default().with_lambda(lambda)).unwrap();
            assert!(r.converged);
            for (i, d) in [1.0, 2.0, 3.0].iter().enumerate() {
                assert!((r.estimate.get(i, i) - 1.0 / (d + lambda)).abs() < 1e-14);
            }
            assert_eq!(r.estimate.get(0, 1), 0.0);
        }
    }

    #[test]
    fn zero_lambda_recovers_inverse() {
        let s = random_cov(4, 11);
        let cfg = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default().with_lambda(0.0)
        };
        let r = graphical_lasso(&s, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.estimate.max_abs_diff(&s.invert().unwrap()) < 1e-5);
    }

    #[test]
    fn large_lambda_gives_diagonal() {
        let s = random_cov(5, 2);
        let max_off = (0..5)
            .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s.get(i, j).abs())
            .fold(0.0, f64::max);
        let r = graphical_lasso(&s, &SolverConfig::default().with_lambda(max_off)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(r.estimate.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn kkt_and_diagonal_identity() {
        let s = random_cov(6, 5);
        let cfg = SolverConfig::default().with_lambda(0.05);
        let r = graphical_lasso(&s, &cfg).unwrap();
        assert!(r.converged);
        assert!(kkt_residual(&r.estimate, &s, 0.05).unwrap() < 1e-4);
        let w = r.estimate.invert().unwrap();
        for i in 0..6 {
            assert!((w.get(i, i) - s.get(i, i) - 0.05).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_input_without_penalty_is_rejected() {
        let s = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            graphical_lasso(&s, &SolverConfig::default().with_lambda(0.0)),
            Err(Error::SingularInput)
        ));
        assert!(graphical_lasso(&s, &SolverConfig::default().with_lambda(0.1)).is_ok());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = random_cov(6, 8);
        let cfg = SolverConfig {
            max_outer_iters: 1,
            tol: 1e-14,
            ..SolverConfig::default().with_lambda(0.01)
        };
        let r = graphical_lasso(&s, &cfg).unwrap();
        assert!(!r.converged);
        assert!(matches!(
            r.require_converged(),
            Err(Error::MaxIterationsExceeded { iterations: 1 })
        ));
    }

    #[test]
    fn scale_equivariance() {
        let s = random_cov(5, 21);
        let cfg = SolverConfig::default().with_lambda(0.07);
        let a = graphical_lasso(&s, &cfg).unwrap();
        let b = graphical_lasso(&s.scaled(2.0), &cfg.with_lambda(0.14)).unwrap();
        assert!(b.estimate.max_abs_diff(&a.estimate.scaled(0.5)) < 1e-8);
    }
}
