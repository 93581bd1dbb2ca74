use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::copula::to_gaussian;
use crate::error::{Error, Result};

/// Multichannel recording laid out as trials x time x channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    data: Array3<f64>,
    sampling_rate: f64,
    channel_labels: Vec<String>,
}

/// Shape and labels of a panel, as stored in the binary sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelHeader {
    pub trials: usize,
    pub time_points: usize,
    pub channels: usize,
    pub sampling_rate: f64,
    pub channel_labels: Vec<String>,
}

impl TimeSeriesPanel {
    pub fn new(data: Array3<f64>, sampling_rate: f64, channel_labels: Vec<String>) -> Result<Self> {
        let (trials, time, channels) = data.dim();
        if trials == 0 || time == 0 || channels == 0 {
            return Err(Error::EmptyPanel);
        }
        if channel_labels.len() != channels {
            return Err(Error::DimensionMismatch {
                expected: channels,
                found: channel_labels.len(),
            });
        }
        if !(sampling_rate > 0.0) || !sampling_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            // Row of the flattened (trial, time) grid.
            return Err(Error::NonFiniteSample {
                row: index / channels,
            });
        }
        Ok(Self {
            data,
            sampling_rate,
            channel_labels,
        })
    }

    /// Panel with labels `ch1..chP`.
    pub fn with_default_labels(data: Array3<f64>, sampling_rate: f64) -> Result<Self> {
        let labels = default_labels(data.dim().2);
        Self::new(data, sampling_rate, labels)
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn trial_count(&self) -> usize {
        self.data.dim().0
    }

    pub fn time_points(&self) -> usize {
        self.data.dim().1
    }

    pub fn channel_count(&self) -> usize {
        self.data.dim().2
    }

    pub fn header(&self) -> PanelHeader {
        PanelHeader {
            trials: self.trial_count(),
            time_points: self.time_points(),
            channels: self.channel_count(),
            sampling_rate: self.sampling_rate,
            channel_labels: self.channel_labels.clone(),
        }
    }

    /// Every sample of channel `c`, trials concatenated in order.
    pub fn pooled_channel(&self, c: usize) -> Vec<f64> {
        self.data.index_axis(Axis(2), c).iter().copied().collect()
    }

    /// All (trial, time) rows stacked into a `(trials * time) x channels` matrix.
    pub fn stacked(&self) -> Array2<f64> {
        let (t, n, p) = self.data.dim();
        self.data
            .to_shape((t * n, p))
            .expect("standard layout")
            .to_owned()
    }

    /// Copula-transforms each channel, pooling all trials and time points of
    /// the channel into one empirical CDF.
    pub fn gaussianized(&self) -> Result<TimeSeriesPanel> {
        let (t, n, p) = self.data.dim();
        let mut out = Array3::<f64>::zeros((t, n, p));
        for c in 0..p {
            let scores = to_gaussian(&self.pooled_channel(c))?;
            for (dst, v) in out.index_axis_mut(Axis(2), c).iter_mut().zip(scores) {
                *dst = v;
            }
        }
        TimeSeriesPanel::new(out, self.sampling_rate, self.channel_labels.clone())
    }

    /// Panel holding only the listed trials, in the given order.
    pub fn select_trials(&self, trials: &[usize]) -> Result<TimeSeriesPanel> {
        if let Some(&bad) = trials.iter().find(|&&t| t >= self.trial_count()) {
            return Err(Error::OutOfRange {
                value: bad as f64,
                domain: "trial index",
            });
        }
        let data = self.data.select(Axis(0), trials);
        TimeSeriesPanel::new(data, self.sampling_rate, self.channel_labels.clone())
    }

    /// Reorders channels so that new channel `i` is old channel `perm[i]`.
    pub fn permute_channels(&self, perm: &[usize]) -> Result<TimeSeriesPanel> {
        if perm.len() != self.channel_count() {
            return Err(Error::DimensionMismatch {
                expected: self.channel_count(),
                found: perm.len(),
            });
        }
        let data = self.data.select(Axis(2), perm);
        let labels = perm
            .iter()
            .map(|&i| self.channel_labels[i].clone())
            .collect();
        TimeSeriesPanel::new(data, self.sampling_rate, labels)
    }
}

pub(crate) fn default_labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("ch{i}")).collect()
}
