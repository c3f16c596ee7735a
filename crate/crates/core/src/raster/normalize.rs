use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-channel standardization statistics, estimated on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Build from explicit values. A zero (or non-finite) std marks a
    /// constant channel and is replaced by 1.
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::shape(
                format!("{} std entries", mean.len()),
                format!("{}", std.len()),
            ));
        }
        let std = std
            .into_iter()
            .enumerate()
            .map(|(c, s)| {
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    log::warn!("channel {c} has std {s}; treating it as constant (std = 1)");
                    1.0
                }
            })
            .collect();
        Ok(ChannelStats { mean, std })
    }

    pub fn identity(channels: usize) -> Self {
        ChannelStats {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Population mean and standard deviation of each channel over planar
    /// `channels x plane` inputs.
    pub fn from_inputs<'a, I>(inputs: I, channels: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f32]> + Clone,
    {
        let mut n = 0usize;
        let mut sum = vec![0.0f64; channels];
        for input in inputs.clone() {
            if channels == 0 || input.len() % channels != 0 {
                return Err(Error::shape(format!("multiple of {channels} values"), input.len()));
            }
            let plane = input.len() / channels;
            for (c, s) in sum.iter_mut().enumerate() {
                *s += input[c * plane..(c + 1) * plane].iter().map(|&v| v as f64).sum::<f64>();
            }
            n += plane;
        }
        if n == 0 {
            return Err(Error::Empty("no inputs to estimate channel statistics".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut sq = vec![0.0f64; channels];
        for input in inputs {
            let plane = input.len() / channels;
            for (c, acc) in sq.iter_mut().enumerate() {
                *acc += input[c * plane..(c + 1) * plane]
                    .iter()
                    .map(|&v| (v as f64 - mean[c]).powi(2))
                    .sum::<f64>();
            }
        }
        let std = sq.iter().map(|s| (s / n as f64).sqrt()).collect();
        ChannelStats::new(mean, std)
    }

    /// `(x - mean[c]) / std[c]` for one planar input, written into `out`.
    pub fn normalize_into(&self, input: &[f32], out: &mut [f32]) -> Result<()> {
        let channels = self.channels();
        if channels == 0 || !input.len().is_multiple_of(channels) || out.len() != input.len() {
            return Err(Error::shape(
                format!("planar input with {channels} channels"),
                format!("{} values", input.len()),
            ));
        }
        let plane = input.len() / channels;
        for c in 0..channels {
            let (m, s) = (self.mean[c], self.std[c]);
            for (o, &x) in out[c * plane..(c + 1) * plane]
                .iter_mut()
                .zip(&input[c * plane..(c + 1) * plane])
            {
                *o = ((x as f64 - m) / s) as f32;
            }
        }
        Ok(())
    }

    pub fn normalize(&self, input: &[f32]) -> Result<Vec<f32>> {
        let mut out = vec![0.0; input.len()];
        self.normalize_into(input, &mut out)?;
        Ok(out)
    }
}

/// Standardize a batch of planar inputs with `stats`.
pub fn normalize_channels(inputs: &[Vec<f32>], stats: &ChannelStats) -> Result<Vec<Vec<f32>>> {
    inputs.iter().map(|x| stats.normalize(x)).collect()
}
