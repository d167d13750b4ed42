//! Cross-spectrum estimators: frequency smoothing, modal smoothing and the two
//! combined (modal first, then averaged over frequency).

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sh::{sh_channels, sh_index};
use crate::synthesis::{BeamformingVector, SpectrumMatrix};

/// Relative threshold for counting dominant eigenvalues in noiseless data.
pub const DOMINANT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingMethod {
    Frequency,
    Modal,
    Combined,
}

impl SmoothingMethod {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Frequency => "FS",
            Self::Modal => "MS",
            Self::Combined => "MS+FS",
        }
    }
}

impl std::str::FromStr for SmoothingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frequency" | "fs" => Ok(Self::Frequency),
            "modal" | "ms" => Ok(Self::Modal),
            "combined" | "ms+fs" => Ok(Self::Combined),
            other => Err(Error::Config(format!("unknown smoothing method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSpectrumMeta {
    pub method: SmoothingMethod,
    /// Frequencies (Hz) of the bins that entered the estimate.
    pub freqs_hz: Vec<f64>,
    /// Number of rank-one terms averaged.
    pub terms: usize,
}

/// Smoothed Hermitian PSD cross-spectrum matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectrum {
    pub mat: DMatrix<Complex64>,
    pub meta: CrossSpectrumMeta,
}

impl CrossSpectrum {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `‖S - Sᴴ‖_F / ‖S‖_F`.
    pub fn hermitian_residual(&self) -> f64 {
        let norm = self.mat.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.mat - self.mat.adjoint()).norm() / norm
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn scaled(&self, factor: f64) -> CrossSpectrum {
        CrossSpectrum {
            mat: self.mat.scale(factor),
            meta: self.meta.clone(),
        }
    }

    /// Metadata as JSON, matrix as CSV `row,col,re,im`.
    pub fn write_json_meta<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.meta)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["row", "col", "re", "im"]).map_err(io)?;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let v = self.mat[(r, c)];
                w.write_record(&[r.to_string(), c.to_string(), v.re.to_string(), v.im.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Average of `v vᴴ`, symmetrized so the result is exactly Hermitian.
fn outer_average<'a>(vectors: impl Iterator<Item = DVector<Complex64>> + 'a) -> Result<(DMatrix<Complex64>, usize)> {
    let mut acc: Option<DMatrix<Complex64>> = None;
    let mut count = 0usize;
    for v in vectors {
        let term = &v * v.adjoint();
        match acc.as_mut() {
            None => acc = Some(term),
            Some(a) => {
                if a.shape() != term.shape() {
                    return Err(Error::Dimension("snapshot lengths differ".into()));
                }
                *a += term;
            }
        }
        count += 1;
    }
    let acc = acc.ok_or(Error::Empty("snapshot list"))?;
    Ok((hermitize(acc.unscale(count as f64)), count))
}

fn hermitize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    (&m + m.adjoint()).unscale(2.0)
}

/// `a_nm = A d_nm`, column `n² + n + m` of `A`.
pub fn modal_vector(a: &DMatrix<Complex64>, n: usize, m: i64) -> Result<DVector<Complex64>> {
    if m.unsigned_abs() as usize > n || sh_channels(n) > a.ncols() {
        return Err(Error::Domain(format!(
            "channel ({n}, {m}) not present in {} columns",
            a.ncols()
        )));
    }
    Ok(a.column(sh_index(n, m)).into_owned())
}

/// Loudspeaker order implied by a column count, if it is a perfect square.
fn order_of_columns(cols: usize) -> Result<usize> {
    let n = (cols as f64).sqrt().round() as usize;
    if n == 0 || n * n != cols {
        return Err(Error::Dimension(format!("{cols} columns is not (N+1)² for any order")));
    }
    Ok(n - 1)
}

/// `(1/Q) Σ_q a(ω_q) a(ω_q)ᴴ`.
pub fn frequency_smooth(snapshots: &[DVector<Complex64>]) -> Result<CrossSpectrum> {
    let (mat, terms) = outer_average(snapshots.iter().cloned())?;
    Ok(CrossSpectrum {
        mat,
        meta: CrossSpectrumMeta {
            method: SmoothingMethod::Frequency,
            freqs_hz: Vec::new(),
            terms,
        },
    })
}

/// Frequency smoothing of `A(ω) γ` over every bin of `spec`.
pub fn frequency_smooth_spectrum(spec: &SpectrumMatrix, beam: &BeamformingVector) -> Result<CrossSpectrum> {
    let snaps = spec
        .mats
        .iter()
        .map(|a| {
            if a.ncols() != beam.coeffs.len() {
                return Err(Error::Dimension(format!(
                    "beamformer length {} for {} loudspeaker channels",
                    beam.coeffs.len(),
                    a.ncols()
                )));
            }
            Ok(a * &beam.coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = frequency_smooth(&snaps)?;
    out.meta.freqs_hz = spec.freqs();
    Ok(out)
}

/// `A Aᴴ / (N_L+1)²`.
pub fn modal_smooth(a: &DMatrix<Complex64>, order: usize) -> Result<CrossSpectrum> {
    let cols = sh_channels(order);
    if a.ncols() != cols {
        return Err(Error::Dimension(format!(
            "A has {} columns, order {order} needs {cols}",
            a.ncols()
        )));
    }
    Ok(CrossSpectrum {
        mat: hermitize((a * a.adjoint()).unscale(cols as f64)),
        meta: CrossSpectrumMeta {
            method: SmoothingMethod::Modal,
            freqs_hz: Vec::new(),
            terms: cols,
        },
    })
}

/// `(1/(N_L+1)²) Σ_nm a_nm a_nmᴴ` over explicit selector beamformers.
pub fn modal_smooth_channel_sum(a: &DMatrix<Complex64>, order: usize) -> Result<CrossSpectrum> {
    let mut snaps = Vec::with_capacity(sh_channels(order));
    for n in 0..=order {
        for m in -(n as i64)..=(n as i64) {
            let d = BeamformingVector::selector(order, n, m)?;
            if a.ncols() != d.coeffs.len() {
                return Err(Error::Dimension(format!(
                    "A has {} columns, order {order} needs {}",
                    a.ncols(),
                    d.coeffs.len()
                )));
            }
            snaps.push(a * d.coeffs);
        }
    }
    let (mat, terms) = outer_average(snaps.into_iter())?;
    Ok(CrossSpectrum {
        mat,
        meta: CrossSpectrumMeta {
            method: SmoothingMethod::Modal,
            freqs_hz: Vec::new(),
            terms,
        },
    })
}

/// First `(N'+1)²` columns of `A`.
pub fn truncate_loudspeaker_order(a: &DMatrix<Complex64>, new_order: usize) -> Result<DMatrix<Complex64>> {
    let cols = sh_channels(new_order);
    if cols > a.ncols() {
        return Err(Error::Domain(format!(
            "cannot truncate {} columns to order {new_order}",
            a.ncols()
        )));
    }
    Ok(a.columns(0, cols).into_owned())
}

/// `(1/Q) Σ_q A(ω_q) A(ω_q)ᴴ / (N_L+1)²`.
pub fn combined_smooth(mats: &[DMatrix<Complex64>], order: usize) -> Result<CrossSpectrum> {
    let first = mats.first().ok_or(Error::Empty("frequency list"))?;
    let mut acc = DMatrix::zeros(first.nrows(), first.nrows());
    for a in mats {
        if a.nrows() != first.nrows() {
            return Err(Error::Dimension("matrices differ in row count".into()));
        }
        acc += modal_smooth(a, order)?.mat;
    }
    Ok(CrossSpectrum {
        mat: hermitize(acc.unscale(mats.len() as f64)),
        meta: CrossSpectrumMeta {
            method: SmoothingMethod::Combined,
            freqs_hz: Vec::new(),
            terms: mats.len() * sh_channels(order),
        },
    })
}

/// Combined smoothing over every bin of `spec`, loudspeaker order inferred
/// from the column count.
pub fn combined_smooth_spectrum(spec: &SpectrumMatrix) -> Result<CrossSpectrum> {
    let order = order_of_columns(spec.shape().1)?;
    let mut out = combined_smooth(&spec.mats, order)?;
    out.meta.freqs_hz = spec.freqs();
    Ok(out)
}

/// Modal smoothing of a single-bin spectrum.
pub fn modal_smooth_spectrum(spec: &SpectrumMatrix) -> Result<CrossSpectrum> {
    if spec.len() != 1 {
        return Err(Error::Dimension(format!(
            "modal smoothing expects one bin, got {}",
            spec.len()
        )));
    }
    let order = order_of_columns(spec.shape().1)?;
    let mut out = modal_smooth(&spec.mats[0], order)?;
    out.meta.freqs_hz = spec.freqs();
    Ok(out)
}
