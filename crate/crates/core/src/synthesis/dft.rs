use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::SpectrumMatrix;
use crate::error::{Error, Result};

/// Real impulse responses, one per matrix entry, `channels[col * rows + row]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponses {
    pub fs: f64,
    pub rows: usize,
    pub cols: usize,
    pub channels: Vec<Vec<f64>>,
}

impl ImpulseResponses {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, row: usize, col: usize) -> &[f64] {
        &self.channels[col * self.rows + row]
    }

    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|v| v * v).sum()
    }
}

/// `x[t] = (1/N) Σ_k X[k] e^{-2πikt/N}` for every entry of a full one-sided
/// spectrum.
pub fn inverse_dft(spec: &SpectrumMatrix) -> Result<ImpulseResponses> {
    if !spec.is_full_one_sided() {
        return Err(Error::Dimension(format!(
            "time conversion needs bins 0..={}, have {}",
            spec.n_fft / 2,
            spec.len()
        )));
    }
    let n = spec.n_fft;
    let (rows, cols) = spec.shape();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut channels = Vec::with_capacity(rows * cols);
    for c in 0..cols {
        for r in 0..rows {
            for (k, m) in spec.mats.iter().enumerate() {
                buf[k] = m[(r, c)];
            }
            for k in (n / 2 + 1)..n {
                buf[k] = buf[n - k].conj();
            }
            fft.process(&mut buf);
            channels.push(buf.iter().map(|v| v.re / n as f64).collect());
        }
    }
    Ok(ImpulseResponses {
        fs: spec.fs,
        rows,
        cols,
        channels,
    })
}

/// `X[k] = Σ_t x[t] e^{+2πikt/N}`, keeping bins `0..=N/2`.
pub fn forward_dft(ir: &ImpulseResponses) -> Result<SpectrumMatrix> {
    let n = ir.len();
    if n < 2 || ir.channels.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension(
            "impulse responses must share a length of at least 2".into(),
        ));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let half = n / 2;
    let mut mats = vec![DMatrix::zeros(ir.rows, ir.cols); half + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..ir.cols {
        for r in 0..ir.rows {
            for (dst, x) in buf.iter_mut().zip(ir.entry(r, c)) {
                *dst = Complex64::new(*x, 0.0);
            }
            fft.process(&mut buf);
            for (k, m) in mats.iter_mut().enumerate() {
                m[(r, c)] = buf[k];
            }
        }
    }
    Ok(SpectrumMatrix {
        fs: ir.fs,
        n_fft: n,
        bins: (0..=half).collect(),
        mats,
    })
}
