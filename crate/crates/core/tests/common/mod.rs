#![allow(dead_code)]

use cggm::pipeline::TimeSeriesPanel;
use cggm::simbench::sample_mvn;
use cggm::SymMatrix;
use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent Gaussian white noise with standard deviation `sd`.
pub fn white_panel(trials: usize, n: usize, p: usize, sd: f64, seed: u64) -> TimeSeriesPanel {
    let mut r = rng(seed);
    let data = Array3::from_shape_fn((trials, n, p), |_| {
        sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)
    });
    TimeSeriesPanel::with_default_labels(data, 250.0).unwrap()
}

/// Panel whose rows are i.i.d. draws from `N(0, sigma)`.
pub fn mvn_panel(sigma: &SymMatrix, trials: usize, n: usize, seed: u64) -> TimeSeriesPanel {
    let rows = sample_mvn(sigma, trials * n, seed).unwrap();
    let p = sigma.dim();
    let data = rows.into_shape_with_order((trials, n, p)).unwrap();
    TimeSeriesPanel::with_default_labels(data, 250.0).unwrap()
}

/// Precision matrix with unit diagonal and `weight` on each listed edge.
pub fn planted_precision(p: usize, edges: &[(usize, usize)], weight: f64) -> SymMatrix {
    let mut theta = Array2::<f64>::eye(p);
    for &(i, j) in edges {
        theta[[i, j]] = weight;
        theta[[j, i]] = weight;
    }
    SymMatrix::from_array(theta).unwrap()
}

/// Two independent AR(1) channels plus a third equal to the first plus noise.
pub fn ar1_triplet(trials: usize, n: usize, seed: u64) -> TimeSeriesPanel {
    let mut r = rng(seed);
    let mut z = || <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r);
    let mut data = Array3::<f64>::zeros((trials, n, 3));
    for t in 0..trials {
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..n {
            a = 0.7 * a + z();
            b = 0.5 * b + z();
            data[[t, k, 0]] = a;
            data[[t, k, 1]] = b;
            data[[t, k, 2]] = a + 0.5 * z();
        }
    }
    TimeSeriesPanel::with_default_labels(data, 250.0).unwrap()
}

/// Time-domain covariance with per-trial centering, pooled over trials.
pub fn pooled_time_covariance(panel: &TimeSeriesPanel) -> SymMatrix {
    let (trials, n, p) = panel.data().dim();
    let mut acc = Array2::<f64>::zeros((p, p));
    for trial in panel.data().outer_iter() {
        let mean = trial.mean_axis(ndarray::Axis(0)).unwrap();
        let x = &trial - &mean.insert_axis(ndarray::Axis(0));
        acc += &x.t().dot(&x);
    }
    SymMatrix::from_array(acc / (trials * n) as f64).unwrap()
}
