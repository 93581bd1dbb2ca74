//! Trial-averaged multitaper cross-spectral density estimation.
//!
//! For each trial, channel and sine taper the mean-centered series is
//! tapered and Fourier transformed on the FFT grid of the trial length.
//! The spectral matrix at each nonnegative frequency is the average of
//! `d(w) d(w)^H` over trials and tapers, where `d(w)` stacks the tapered
//! coefficients of all channels. Tapers have unit energy, so white noise
//! of variance `s2` has a flat spectrum at level `s2`.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{HermMatrix, SymMatrix};
use crate::pipeline::TimeSeriesPanel;

/// Shortest trial accepted by [`estimate_spectrum`].
pub const MIN_TIME_POINTS: usize = 64;
pub const DEFAULT_TAPER_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub low: f64,
    pub high: f64,
    pub name: String,
}

impl FrequencyBand {
    pub fn new(low: f64, high: f64, name: impl Into<String>) -> Result<Self> {
        if !(low >= 0.0 && low < high) || !high.is_finite() {
            return Err(Error::InvalidBand {
                low,
                high,
                nyquist: f64::NAN,
            });
        }
        Ok(Self {
            low,
            high,
            name: name.into(),
        })
    }

    /// Conventional EEG band by name, or `full` for `[0, nyquist]`.
    pub fn named(name: &str, nyquist: f64) -> Result<Self> {
        let (low, high) = match name {
            "delta" => (1.0, 4.0),
            "theta" => (4.0, 8.0),
            "alpha" => (8.0, 13.0),
            "beta" => (13.0, 30.0),
            "gamma" => (30.0, 45.0),
            "full" => (0.0, nyquist),
            other => {
                return Err(Error::InvalidArgument(format!("unknown band {other:?}")));
            }
        };
        let band = Self::new(low, high, name)?;
        band.check_nyquist(nyquist)?;
        Ok(band)
    }

    pub fn check_nyquist(&self, nyquist: f64) -> Result<()> {
        if self.high > nyquist {
            return Err(Error::InvalidBand {
                low: self.low,
                high: self.high,
                nyquist,
            });
        }
        Ok(())
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low && f <= self.high
    }
}

/// Cross-spectral density matrices on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    frequencies: Vec<f64>,
    matrices: Vec<HermMatrix>,
    sampling_rate: f64,
}

impl SpectralDensity {
    pub fn new(
        frequencies: Vec<f64>,
        matrices: Vec<HermMatrix>,
        sampling_rate: f64,
    ) -> Result<Self> {
        if frequencies.len() != matrices.len() || matrices.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: frequencies.len(),
                found: matrices.len(),
            });
        }
        let p = matrices[0].dim();
        if let Some(m) = matrices.iter().find(|m| m.dim() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: m.dim(),
            });
        }
        let nyquist = sampling_rate / 2.0;
        if frequencies.windows(2).any(|w| !(w[0] < w[1]))
            || frequencies.iter().any(|&f| !(0.0..=nyquist).contains(&f))
        {
            return Err(Error::InvalidArgument(
                "frequencies must be ascending and within [0, nyquist]".into(),
            ));
        }
        Ok(Self {
            frequencies,
            matrices,
            sampling_rate,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn matrices(&self) -> &[HermMatrix] {
        &self.matrices
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn n_channels(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Squared coherence `|S_ij|^2 / (S_ii S_jj)` at every frequency.
    pub fn coherence(&self, i: usize, j: usize) -> Vec<f64> {
        self.matrices
            .iter()
            .map(|m| m.get(i, j).norm_sqr() / (m.get(i, i).re * m.get(j, j).re))
            .collect()
    }

    fn band_indices(&self, band: &FrequencyBand) -> Result<Vec<usize>> {
        let idx: Vec<usize> = (0..self.frequencies.len())
            .filter(|&k| band.contains(self.frequencies[k]))
            .collect();
        if idx.is_empty() {
            return Err(Error::EmptyBand {
                name: band.name.clone(),
                low: band.low,
                high: band.high,
            });
        }
        Ok(idx)
    }
}

/// Orthonormal sine tapers `sqrt(2 / (n + 1)) sin(pi k t / (n + 1))`,
/// one per row, `k = 1..=count`, `t = 1..=n`.
pub fn sine_tapers(n: usize, count: usize) -> Array2<f64> {
    let norm = (2.0 / (n + 1) as f64).sqrt();
    Array2::from_shape_fn((count, n), |(k, t)| {
        norm * (PI * (k + 1) as f64 * (t + 1) as f64 / (n + 1) as f64).sin()
    })
}

/// Multitaper estimate averaged over trials and tapers.
pub fn estimate_spectrum(panel: &TimeSeriesPanel, taper_count: usize) -> Result<SpectralDensity> {
    let (trials, n, p) = panel.data().dim();
    if trials == 0 || p < 2 {
        return Err(Error::EmptyPanel);
    }
    if n < MIN_TIME_POINTS {
        return Err(Error::TooShort {
            needed: MIN_TIME_POINTS,
            got: n,
        });
    }
    if taper_count == 0 {
        return Err(Error::InvalidArgument(
            "taper_count must be positive".into(),
        ));
    }

    let tapers = sine_tapers(n, taper_count);
    let n_freq = n / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut acc = vec![Array2::<Complex64>::zeros((p, p)); n_freq];
    let mut coeffs = Array2::<Complex64>::zeros((p, n_freq));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    for trial in panel.data().axis_iter(Axis(0)) {
        for taper in tapers.rows() {
            for c in 0..p {
                let series = trial.index_axis(Axis(1), c);
                let mean = series.sum() / n as f64;
                for (t, slot) in buf.iter_mut().enumerate() {
                    *slot = Complex64::new((series[t] - mean) * taper[t], 0.0);
                }
                fft.process(&mut buf);
                for f in 0..n_freq {
                    coeffs[[c, f]] = buf[f];
                }
            }
            for (f, m) in acc.iter_mut().enumerate() {
                for i in 0..p {
                    let di = coeffs[[i, f]];
                    for j in i..p {
                        m[[i, j]] += di * coeffs[[j, f]].conj();
                    }
                }
            }
        }
    }

    let scale = 1.0 / (trials * taper_count) as f64;
    let fs = panel.sampling_rate();
    let mut matrices = Vec::with_capacity(n_freq);
    for mut m in acc {
        for i in 0..p {
            for j in i..p {
                m[[i, j]] *= scale;
                m[[j, i]] = m[[i, j]].conj();
            }
        }
        matrices.push(HermMatrix::from_array(m)?);
    }
    let frequencies = (0..n_freq).map(|f| f as f64 * fs / n as f64).collect();
    SpectralDensity::new(frequencies, matrices, fs)
}

/// Real part of the band-averaged spectral matrix.
pub fn band_collapse(sd: &SpectralDensity, band: &FrequencyBand) -> Result<SymMatrix> {
    let idx = sd.band_indices(band)?;
    let p = sd.n_channels();
    let mut sum = Array2::<f64>::zeros((p, p));
    for &k in &idx {
        sum += &sd.matrices[k].as_array().mapv(|z| z.re);
    }
    SymMatrix::from_array(sum / idx.len() as f64)
}

/// Band-collapsed matrix of each trial on its own.
///
/// Their mean equals `band_collapse(estimate_spectrum(panel))` up to
/// rounding, so subsets of trials can be averaged for cross-validation.
pub fn trial_band_matrices(
    panel: &TimeSeriesPanel,
    band: &FrequencyBand,
    taper_count: usize,
) -> Result<Vec<SymMatrix>> {
    (0..panel.trial_count())
        .map(|t| {
            let sd = estimate_spectrum(&panel.select_trials(&[t])?, taper_count)?;
            band_collapse(&sd, band)
        })
        .collect()
}

/// Largest normalized entry of `(S(w) + ridge I)^-1` over the band.
///
/// A near-zero score for `(i, j)` at every frequency is the frequency-domain
/// signature of conditional independence between channels `i` and `j`.
pub fn partial_coherence_screen(
    sd: &SpectralDensity,
    band: &FrequencyBand,
    ridge: f64,
) -> Result<SymMatrix> {
    if !(ridge > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge must be positive, got {ridge}"
        )));
    }
    let idx = sd.band_indices(band)?;
    let p = sd.n_channels();
    let mut score = SymMatrix::zeros(p);
    for &k in &idx {
        let inv = sd.matrices[k].add_identity(ridge).invert()?;
        for i in 0..p {
            for j in (i + 1)..p {
                let denom = (inv.get(i, i).re * inv.get(j, j).re).sqrt();
                let v = inv.get(i, j).norm() / denom;
                if v > score.get(i, j) {
                    score.set(i, j, v);
                }
            }
        }
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn tapers_are_orthonormal() {
        let t = sine_tapers(100, 5);
        let g = t.dot(&t.t());
        for i in 0..5 {
            for j in 0..5 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn band_validation() {
        assert!(FrequencyBand::new(5.0, 5.0, "x").is_err());
        assert!(FrequencyBand::new(-1.0, 5.0, "x").is_err());
        assert!(FrequencyBand::named("alpha", 50.0).is_ok());
        assert!(FrequencyBand::named("gamma", 20.0).is_err());
        assert!(FrequencyBand::named("zeta", 50.0).is_err());
        assert_eq!(FrequencyBand::named("full", 50.0).unwrap().high, 50.0);
    }

    #[test]
    fn rejects_short_or_empty_panels() {
        let short = TimeSeriesPanel::with_default_labels(Array3::zeros((1, 63, 2)), 100.0).unwrap();
        assert!(matches!(
            estimate_spectrum(&short, 3),
            Err(Error::TooShort { .. })
        ));
        let one = TimeSeriesPanel::with_default_labels(Array3::zeros((1, 128, 1)), 100.0).unwrap();
        assert!(matches!(estimate_spectrum(&one, 3), Err(Error::EmptyPanel)));
    }

    #[test]
    fn constant_spectrum_collapses_to_its_real_part() {
        let m = HermMatrix::from_array(ndarray::arr2(&[
            [Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.25)],
            [Complex64::new(0.5, -0.25), Complex64::new(1.0, 0.0)],
        ]))
        .unwrap();
        let sd = SpectralDensity::new(vec![0.0, 1.0, 2.0], vec![m.clone(); 3], 10.0).unwrap();
        let band = FrequencyBand::new(0.0, 5.0, "all").unwrap();
        assert_eq!(band_collapse(&sd, &band).unwrap(), m.real_part());
        let empty = FrequencyBand::new(2.5, 4.0, "gap").unwrap();
        assert!(matches!(
            band_collapse(&sd, &empty),
            Err(Error::EmptyBand { .. })
        ));
        assert!(matches!(
            partial_coherence_screen(&sd, &empty, 1e-3),
            Err(Error::EmptyBand { .. })
        ));
    }

    #[test]
    fn single_channel_screen_is_zero() {
        let m = HermMatrix::from_array(ndarray::arr2(&[[Complex64::new(3.0, 0.0)]])).unwrap();
        let sd = SpectralDensity::new(vec![0.0, 1.0], vec![m.clone(), m], 10.0).unwrap();
        let band = FrequencyBand::new(0.0, 5.0, "all").unwrap();
        assert_eq!(
            partial_coherence_screen(&sd, &band, 1e-6).unwrap(),
            SymMatrix::zeros(1)
        );
    }
}
