//! Empirical-CDF copula transform.
//!
//! Each observed channel `Y` is modelled as a monotone transform of a latent
//! standard Gaussian `X`, `Y = F^-1(Phi(X))`. Inverting gives
//! `X = Phi^-1(F(Y))`. The raw empirical CDF reaches 1 at the sample
//! maximum, so the transform uses the rescaled mid-rank `rank / (n + 1)`
//! instead, which keeps every output finite.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Empirical cumulative distribution function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// Fits the empirical CDF `F(x) = #{samples <= x} / n`.
    pub fn fit(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Generalized inverse `inf { z : F(z) >= y }` over the sample points.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::OutOfRange {
                value: y,
                domain: "(0, 1]",
            });
        }
        let n = self.sorted.len();
        // F(sorted[i]) >= (i + 1) / n, and every sample below sorted[i]
        // sits at an index < i, so the first i with (i + 1) / n >= y wins.
        let (mut lo, mut hi) = (0usize, n - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if ((mid + 1) as f64 / n as f64) < y {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(self.sorted[lo])
    }
}

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Newton step against [`gaussian_cdf`].
pub fn gaussian_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange {
            value: p,
            domain: "(0, 1)",
        });
    }
    if p > 0.5 {
        // 1 - p is exact here, and the lower tail keeps relative accuracy.
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if density > 0.0 {
        x - (gaussian_cdf(x) - p) / density
    } else {
        x
    }
}

/// Mid-ranks (1-based) of `values`; tied values share the average rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Maps a channel to latent Gaussian scores `Phi^-1(rank / (n + 1))`.
pub fn to_gaussian(channel: &[f64]) -> Result<Vec<f64>> {
    let n = channel.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if let Some(index) = channel.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { index });
    }
    let denom = (n + 1) as f64;
    mid_ranks(channel)
        .into_iter()
        .map(|r| gaussian_quantile(r / denom))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fit_cdf_examples() {
        let f = EmpiricalCdf::fit(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(f.sorted_samples(), &[1.0, 2.0, 3.0]);
        assert_eq!(f.len(), 3);
        assert_eq!(f.eval(2.0), 2.0 / 3.0);
        assert_eq!(f.eval(-10.0), 0.0);
        assert_eq!(f.eval(10.0), 1.0);
    }

    #[test]
    fn fit_cdf_errors() {
        assert!(matches!(
            EmpiricalCdf::fit(&[1.0]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            EmpiricalCdf::fit(&[1.0, f64::NAN]),
            Err(Error::NonFiniteInput { index: 1 })
        ));
    }

    /// Brute-force infimum over the sample points.
    fn inverse_by_enumeration(f: &EmpiricalCdf, y: f64) -> f64 {
        f.sorted_samples()
            .iter()
            .copied()
            .filter(|&z| f.eval(z) >= y)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn inverse_cdf_examples() {
        let f = EmpiricalCdf::fit(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(inverse_by_enumeration(&f, 0.5), 2.0);
        assert_eq!(f.inverse(0.5).unwrap(), 2.0);
        assert_eq!(f.inverse(1.0).unwrap(), 3.0);
        assert_eq!(f.inverse(1e-9).unwrap(), 1.0);
        assert!(f.inverse(0.0).is_err());
        assert!(f.inverse(1.0 + 1e-12).is_err());
    }

    #[test]
    fn inverse_cdf_matches_enumeration_with_ties() {
        let f = EmpiricalCdf::fit(&[4.0, 1.0, 1.0, 2.0, 4.0, 4.0, 7.0]).unwrap();
        for k in 1..=70 {
            let y = k as f64 / 70.0;
            assert_eq!(
                f.inverse(y).unwrap(),
                inverse_by_enumeration(&f, y),
                "y = {y}"
            );
        }
    }

    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gaussian_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_cdf(0.0), 0.5);
        let bisected = quantile_by_bisection(0.975);
        assert!((bisected - 1.959964).abs() < 1e-6);
        assert!((gaussian_quantile(0.975).unwrap() - bisected).abs() < 1e-10);
        for k in 1..=99 {
            let p = k as f64 / 100.0;
            let x = gaussian_quantile(p).unwrap();
            assert!((gaussian_cdf(x) - p).abs() < 1e-9);
            assert!((x - quantile_by_bisection(p)).abs() < 1e-10);
        }
        assert!(gaussian_quantile(0.0).is_err());
        assert!(gaussian_quantile(1.0).is_err());
        assert!(gaussian_quantile(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_tails_are_accurate() {
        for p in [1e-12, 1e-8, 1e-5, 0.01, 0.02425, 0.3] {
            let x = gaussian_quantile(p).unwrap();
            assert!(((gaussian_cdf(x) - p) / p).abs() < 1e-9);
        }
    }

    #[test]
    fn to_gaussian_examples() {
        assert_eq!(to_gaussian(&[5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        let out = to_gaussian(&[0.1, 0.5, 2.0, 9.0, 11.0]).unwrap();
        assert!(out.windows(2).all(|w| w[0] < w[1]));
        assert!(out.iter().all(|v| v.is_finite()));
        assert!(matches!(
            to_gaussian(&[1.0]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn mid_ranks_average_ties() {
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn to_gaussian_preserves_ranks(xs in proptest::collection::vec(-5i32..5, 2..60)) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let out = to_gaussian(&xs).unwrap();
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    prop_assert_eq!(xs[i].partial_cmp(&xs[j]), out[i].partial_cmp(&out[j]));
                }
            }
        }

        #[test]
        fn to_gaussian_monotone_invariant(xs in proptest::collection::vec(-50f64..50.0, 2..80)) {
            let a = to_gaussian(&xs).unwrap();
            let transformed: Vec<f64> = xs.iter().map(|v| (v * 0.3).exp() + 4.0).collect();
            let b = to_gaussian(&transformed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn to_gaussian_idempotent(xs in proptest::collection::vec(-50f64..50.0, 2..80)) {
            let once = to_gaussian(&xs).unwrap();
            let twice = to_gaussian(&once).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
