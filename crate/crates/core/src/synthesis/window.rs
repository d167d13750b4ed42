use serde::{Deserialize, Serialize};

use super::{forward_dft, inverse_dft, SpectrumMatrix};
use crate::error::{Error, Result};

/// Welch-windowed time gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub start_s: f64,
    pub length_samples: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            start_s: 0.007,
            length_samples: 1056,
        }
    }
}

impl WindowSpec {
    pub fn start_sample(&self, fs: f64) -> usize {
        (self.start_s * fs).round() as usize
    }

    pub fn end_s(&self, fs: f64) -> f64 {
        (self.start_sample(fs) + self.length_samples) as f64 / fs
    }
}

/// `w[k] = 1 - ((k - (K-1)/2) / ((K-1)/2))²`.
pub fn welch_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let half = (len as f64 - 1.0) / 2.0;
    (0..len)
        .map(|k| {
            let u = (k as f64 - half) / half;
            1.0 - u * u
        })
        .collect()
}

/// Multiply every impulse response by the gate and return to frequency.
pub fn apply_time_window(spec: &SpectrumMatrix, window: &WindowSpec) -> Result<SpectrumMatrix> {
    if window.length_samples == 0 || window.start_s < 0.0 {
        return Err(Error::Domain("window must start at t >= 0 with positive length".into()));
    }
    let start = window.start_sample(spec.fs);
    let end = start + window.length_samples;
    if end > spec.n_fft {
        return Err(Error::WindowOutOfRange {
            start,
            end,
            n_fft: spec.n_fft,
        });
    }
    let w = welch_window(window.length_samples);
    let mut ir = inverse_dft(spec)?;
    for ch in ir.channels.iter_mut() {
        for (t, v) in ch.iter_mut().enumerate() {
            *v *= if t >= start && t < end { w[t - start] } else { 0.0 };
        }
    }
    forward_dft(&ir)
}
