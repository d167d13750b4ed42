//! SH-domain room transfer matrices `H(ω)` (and `A(ω) = B⁻¹(ω) H(ω)`) on a DFT
//! frequency grid, plus identification noise, time windowing and plane-wave
//! decomposition.
//!
//! A reflection with delay `d` contributes `e^{+iωd}`. The matching transforms
//! are `x[t] = (1/N) Σ_k X[k] e^{-2πikt/N}` and `X[k] = Σ_t x[t] e^{+2πikt/N}`,
//! which put that reflection at `t = d·fs`.

mod dft;
pub mod export;
mod noise;
mod window;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{b_diagonal, g_diagonal, LoudspeakerArrayConfig, MicrophoneArrayConfig};
use crate::error::{Error, Result};
use crate::room::{lambda_l, Reflection};
use crate::sh::{sh_channels, sh_index, sh_order_of, steering_vector};

pub use dft::{forward_dft, inverse_dft, ImpulseResponses};
pub use noise::{add_identification_noise, per_bin_misalignment_db, realized_misalignment_db, NoiseSpec};
pub use window::{apply_time_window, welch_window, WindowSpec};

/// Default relative floor on `|b_n|` for plane-wave decomposition.
pub const DEFAULT_CONDITIONING_FLOOR: f64 = 1e-3;

/// Frequency-indexed transfer matrices on the one-sided DFT grid.
///
/// `bins[i]` is the DFT bin index of `mats[i]`; the bin frequency is
/// `bins[i] · fs / n_fft`. A full one-sided spectrum holds bins `0..=n_fft/2`;
/// the remaining bins of a real response are the conjugates of these.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMatrix {
    pub fs: f64,
    pub n_fft: usize,
    pub bins: Vec<usize>,
    pub mats: Vec<DMatrix<Complex64>>,
}

impl SpectrumMatrix {
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mats.first().map(|m| m.shape()).unwrap_or((0, 0))
    }

    pub fn bin_spacing(&self) -> f64 {
        self.fs / self.n_fft as f64
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.bins[i] as f64 * self.bin_spacing()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.freq(i)).collect()
    }

    pub fn is_full_one_sided(&self) -> bool {
        self.bins.len() == self.n_fft / 2 + 1 && self.bins.iter().enumerate().all(|(i, b)| i == *b)
    }

    /// Matrix at an arbitrary bin `0 ≤ k < n_fft` of a full one-sided spectrum,
    /// using conjugate symmetry above Nyquist.
    pub fn full_bin(&self, k: usize) -> Option<DMatrix<Complex64>> {
        if k >= self.n_fft {
            return None;
        }
        if k <= self.n_fft / 2 {
            let i = self.bins.iter().position(|b| *b == k)?;
            Some(self.mats[i].clone())
        } else {
            let i = self.bins.iter().position(|b| *b == self.n_fft - k)?;
            Some(self.mats[i].conjugate())
        }
    }

    /// Index (into `bins`) of the bin closest to `freq_hz`.
    pub fn nearest(&self, freq_hz: f64) -> Option<usize> {
        (0..self.len()).min_by(|a, b| {
            (self.freq(*a) - freq_hz)
                .abs()
                .total_cmp(&(self.freq(*b) - freq_hz).abs())
        })
    }

    /// Bins whose frequency lies in the closed interval `[lo_hz, hi_hz]`.
    pub fn select_band(&self, lo_hz: f64, hi_hz: f64) -> SpectrumMatrix {
        let keep: Vec<usize> = (0..self.len())
            .filter(|i| {
                let f = self.freq(*i);
                f >= lo_hz && f <= hi_hz
            })
            .collect();
        self.subset(&keep)
    }

    /// The single bin closest to `freq_hz`.
    pub fn select_nearest(&self, freq_hz: f64) -> SpectrumMatrix {
        match self.nearest(freq_hz) {
            Some(i) => self.subset(&[i]),
            None => self.subset(&[]),
        }
    }

    fn subset(&self, idx: &[usize]) -> SpectrumMatrix {
        SpectrumMatrix {
            fs: self.fs,
            n_fft: self.n_fft,
            bins: idx.iter().map(|i| self.bins[*i]).collect(),
            mats: idx.iter().map(|i| self.mats[*i].clone()).collect(),
        }
    }

    /// A 1×1 spectrum holding a single matrix entry.
    pub fn entry_spectrum(&self, row: usize, col: usize) -> SpectrumMatrix {
        SpectrumMatrix {
            fs: self.fs,
            n_fft: self.n_fft,
            bins: self.bins.clone(),
            mats: self
                .mats
                .iter()
                .map(|m| DMatrix::from_element(1, 1, m[(row, col)]))
                .collect(),
        }
    }

    /// The first `cols` columns of every matrix.
    pub fn truncate_columns(&self, cols: usize) -> SpectrumMatrix {
        SpectrumMatrix {
            fs: self.fs,
            n_fft: self.n_fft,
            bins: self.bins.clone(),
            mats: self.mats.iter().map(|m| m.columns(0, cols).into_owned()).collect(),
        }
    }
}

/// Loudspeaker beamforming weights in the SH domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingVector {
    pub coeffs: DVector<Complex64>,
}

impl BeamformingVector {
    /// `d_nm`: a single unit entry at channel `(n, m)`.
    pub fn selector(order: usize, n: usize, m: i64) -> Result<Self> {
        if n > order || m.unsigned_abs() as usize > n {
            return Err(Error::Domain(format!("channel ({n}, {m}) outside order {order}")));
        }
        let mut coeffs = DVector::zeros(sh_channels(order));
        coeffs[sh_index(n, m)] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs })
    }

    pub fn omnidirectional(order: usize) -> Self {
        Self::selector(order, 0, 0).expect("(0,0) exists at every order")
    }
}

/// Per-reflection quantities that do not depend on frequency.
#[derive(Debug, Clone)]
struct ReflectionTerms {
    /// `yᴴ(θ_l)` as a column, microphone order.
    mic_col: Vec<Complex64>,
    /// `y(β_l)` as a row, loudspeaker order.
    ls_row: Vec<Complex64>,
    amplitude: f64,
    delay_s: f64,
}

/// Frequency-independent part of the room model, shared by every bin.
#[derive(Debug, Clone)]
pub struct TransferModel {
    pub mic: MicrophoneArrayConfig,
    pub loudspeaker: LoudspeakerArrayConfig,
    terms: Vec<ReflectionTerms>,
}

impl TransferModel {
    pub fn new(
        reflections: &[Reflection],
        mic: &MicrophoneArrayConfig,
        loudspeaker: &LoudspeakerArrayConfig,
    ) -> Result<Self> {
        if reflections.is_empty() {
            return Err(Error::Empty("reflection list"));
        }
        let terms = reflections
            .iter()
            .map(|r| ReflectionTerms {
                mic_col: steering_vector(&r.doa, mic.order)
                    .coeffs
                    .iter()
                    .map(|c| c.conj())
                    .collect(),
                ls_row: steering_vector(&r.dor, loudspeaker.order)
                    .coeffs
                    .iter()
                    .copied()
                    .collect(),
                amplitude: r.amplitude,
                delay_s: r.delay_s,
            })
            .collect();
        Ok(Self {
            mic: mic.clone(),
            loudspeaker: loudspeaker.clone(),
            terms,
        })
    }

    pub fn max_delay_s(&self) -> f64 {
        self.terms.iter().map(|t| t.delay_s).fold(0.0, f64::max)
    }

    /// `Yᴴ(Θ) Λ(ω) Y(Φ)`, accumulated reflection by reflection.
    fn core(&self, omega: f64) -> DMatrix<Complex64> {
        let rows = sh_channels(self.mic.order);
        let cols = sh_channels(self.loudspeaker.order);
        // column-major accumulation buffer
        let mut acc = vec![Complex64::new(0.0, 0.0); rows * cols];
        for t in &self.terms {
            let lam = Complex64::from_polar(t.amplitude, omega * t.delay_s);
            for (j, y) in t.ls_row.iter().enumerate() {
                let scaled = lam * y;
                let col = &mut acc[j * rows..(j + 1) * rows];
                for (dst, x) in col.iter_mut().zip(&t.mic_col) {
                    *dst += x * scaled;
                }
            }
        }
        DMatrix::from_vec(rows, cols, acc)
    }

    pub fn transfer_a(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let g = g_diagonal(omega, &self.loudspeaker)?;
        let mut m = self.core(omega);
        for (j, gj) in g.iter().enumerate() {
            for v in m.column_mut(j).iter_mut() {
                *v *= gj;
            }
        }
        Ok(m)
    }

    pub fn transfer_h(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let b = b_diagonal(omega, &self.mic)?;
        let mut m = self.transfer_a(omega)?;
        for (i, bi) in b.iter().enumerate() {
            for v in m.row_mut(i).iter_mut() {
                *v *= bi;
            }
        }
        Ok(m)
    }
}

/// `H(ω) = Σ_l B yᴴ(θ_l) y(β_l) G λ_l(ω)`, evaluated term by term.
pub fn assemble_h(
    omega: f64,
    reflections: &[Reflection],
    mic: &MicrophoneArrayConfig,
    loudspeaker: &LoudspeakerArrayConfig,
) -> Result<DMatrix<Complex64>> {
    let b = crate::array::matrix_b(omega, mic)?;
    Ok(&b * assemble_a(omega, reflections, mic, loudspeaker)?)
}

/// `A(ω) = Σ_l yᴴ(θ_l) y(β_l) G λ_l(ω)`, evaluated term by term.
pub fn assemble_a(
    omega: f64,
    reflections: &[Reflection],
    mic: &MicrophoneArrayConfig,
    loudspeaker: &LoudspeakerArrayConfig,
) -> Result<DMatrix<Complex64>> {
    if reflections.is_empty() {
        return Err(Error::Empty("reflection list"));
    }
    let g = crate::array::matrix_g(omega, loudspeaker)?;
    let mut sum = DMatrix::zeros(sh_channels(mic.order), sh_channels(loudspeaker.order));
    for r in reflections {
        let y_mic = steering_vector(&r.doa, mic.order).coeffs;
        let y_ls = steering_vector(&r.dor, loudspeaker.order).coeffs;
        let outer = y_mic.conjugate() * y_ls.transpose();
        sum += outer * &g * lambda_l(r, omega);
    }
    Ok(sum)
}

/// `H(ω) = B Yᴴ(Θ) Λ Y(Φ) G` with explicit steering matrices.
pub fn assemble_h_factored(
    omega: f64,
    reflections: &[Reflection],
    mic: &MicrophoneArrayConfig,
    loudspeaker: &LoudspeakerArrayConfig,
) -> Result<DMatrix<Complex64>> {
    if reflections.is_empty() {
        return Err(Error::Empty("reflection list"));
    }
    let l = reflections.len();
    let y_theta = steering_matrix(reflections.iter().map(|r| r.doa), mic.order, l);
    let y_phi = steering_matrix(reflections.iter().map(|r| r.dor), loudspeaker.order, l);
    let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
        l,
        reflections.iter().map(|r| lambda_l(r, omega)),
    ));
    let b = crate::array::matrix_b(omega, mic)?;
    let g = crate::array::matrix_g(omega, loudspeaker)?;
    Ok(b * y_theta.adjoint() * lambda * y_phi * g)
}

/// `L × (N+1)²` matrix whose rows are `y(dir_l)`.
pub fn steering_matrix(
    dirs: impl Iterator<Item = crate::sh::SphericalAngle>,
    order: usize,
    count: usize,
) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(count, sh_channels(order));
    for (l, d) in dirs.enumerate() {
        let y = steering_vector(&d, order);
        m.row_mut(l).copy_from(&y.coeffs.transpose());
    }
    m
}

/// Broadband `H` on the one-sided grid of an `n_fft`-point DFT. The DC and
/// Nyquist bins are set to zero.
pub fn synthesize_broadband(model: &TransferModel, fs: f64, n_fft: usize) -> Result<SpectrumMatrix> {
    synthesize_with(model, fs, n_fft, true)
}

/// As [`synthesize_broadband`], without the microphone radial function.
pub fn synthesize_broadband_a(model: &TransferModel, fs: f64, n_fft: usize) -> Result<SpectrumMatrix> {
    synthesize_with(model, fs, n_fft, false)
}

fn synthesize_with(model: &TransferModel, fs: f64, n_fft: usize, with_b: bool) -> Result<SpectrumMatrix> {
    if !(fs > 0.0) {
        return Err(Error::Domain(format!("sampling rate must be positive, got {fs}")));
    }
    if n_fft < 4 || !n_fft.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "DFT length must be even and at least 4, got {n_fft}"
        )));
    }
    let delay_samples = model.max_delay_s() * fs;
    if delay_samples >= n_fft as f64 {
        return Err(Error::DftTooShort { n_fft, delay_samples });
    }
    let half = n_fft / 2;
    let shape = (sh_channels(model.mic.order), sh_channels(model.loudspeaker.order));
    let mut mats = Vec::with_capacity(half + 1);
    for k in 0..=half {
        if k == 0 || k == half {
            mats.push(DMatrix::zeros(shape.0, shape.1));
            continue;
        }
        let omega = 2.0 * PI * k as f64 * fs / n_fft as f64;
        mats.push(if with_b {
            model.transfer_h(omega)?
        } else {
            model.transfer_a(omega)?
        });
    }
    Ok(SpectrumMatrix {
        fs,
        n_fft,
        bins: (0..=half).collect(),
        mats,
    })
}

/// Divide microphone channel rows of order `n` by `b_n(ω r_M / c)` at every
/// bin of `spec`.
///
/// Fails if any `|b_n|` falls below `floor_rel · max_n' |b_n'|` at some bin.
pub fn plane_wave_decompose(
    spec: &SpectrumMatrix,
    mic: &MicrophoneArrayConfig,
    floor_rel: f64,
) -> Result<SpectrumMatrix> {
    let mut out = spec.clone();
    for (i, m) in out.mats.iter_mut().enumerate() {
        let f = spec.freq(i);
        if m.nrows() != sh_channels(mic.order) {
            return Err(Error::Dimension(format!(
                "{} rows for microphone order {}",
                m.nrows(),
                mic.order
            )));
        }
        if !(f > 0.0) {
            return Err(Error::Conditioning {
                freq_hz: f,
                order: 0,
                magnitude: 0.0,
                floor: 0.0,
            });
        }
        let b = b_diagonal(2.0 * PI * f, mic)?;
        let peak = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = floor_rel * peak;
        for (row, bv) in b.iter().enumerate() {
            if bv.norm() < floor {
                return Err(Error::Conditioning {
                    freq_hz: f,
                    order: sh_order_of(row),
                    magnitude: bv.norm(),
                    floor,
                });
            }
            let inv = bv.inv();
            for v in m.row_mut(row).iter_mut() {
                *v *= inv;
            }
        }
    }
    Ok(out)
}

/// Multiply rows by `b_n`; the inverse of [`plane_wave_decompose`].
pub fn apply_mic_radial(spec: &SpectrumMatrix, mic: &MicrophoneArrayConfig) -> Result<SpectrumMatrix> {
    let mut out = spec.clone();
    for (i, m) in out.mats.iter_mut().enumerate() {
        let b = b_diagonal(2.0 * PI * spec.freq(i), mic)?;
        for (row, bv) in b.iter().enumerate() {
            for v in m.row_mut(row).iter_mut() {
                *v *= bv;
            }
        }
    }
    Ok(out)
}
