use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SpectrumMatrix;
use crate::error::{Error, Result};

/// System-identification error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-bin normalized misalignment `‖E‖²_F / ‖H‖²_F` in dB.
    pub misalignment_db: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            misalignment_db: -40.0,
            seed: 1,
        }
    }
}

/// Add circular complex Gaussian errors to every bin, scaled so that each
/// bin's expected misalignment equals `misalignment_db`. The generator for
/// bin `k` is ChaCha8 seeded with `seed` on stream `k`, so results do not
/// depend on which bins are present.
pub fn add_identification_noise(spec: &SpectrumMatrix, noise: &NoiseSpec) -> Result<SpectrumMatrix> {
    if noise.misalignment_db.is_nan() {
        return Err(Error::Domain("misalignment must be a number".into()));
    }
    if noise.misalignment_db == f64::NEG_INFINITY {
        return Ok(spec.clone());
    }
    let ratio = 10f64.powf(noise.misalignment_db / 10.0);
    let mut out = spec.clone();
    for (bin, m) in spec.bins.iter().zip(out.mats.iter_mut()) {
        let entries = m.len() as f64;
        let power = m.norm_squared();
        if power == 0.0 {
            continue;
        }
        let sigma = (ratio * power / entries / 2.0).sqrt();
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(*bin as u64);
        for v in m.iter_mut() {
            *v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    Ok(out)
}

/// `10 log10(Σ_k ‖Ĥ_k - H_k‖² / Σ_k ‖H_k‖²)` over the shared bins.
pub fn realized_misalignment_db(noisy: &SpectrumMatrix, clean: &SpectrumMatrix) -> Result<f64> {
    if noisy.bins != clean.bins {
        return Err(Error::Dimension("spectra cover different bins".into()));
    }
    let mut err = 0.0;
    let mut sig = 0.0;
    for (a, b) in noisy.mats.iter().zip(&clean.mats) {
        err += (a - b).norm_squared();
        sig += b.norm_squared();
    }
    if sig == 0.0 {
        return Err(Error::Empty("reference spectrum energy"));
    }
    Ok(10.0 * (err / sig).log10())
}

/// Misalignment of each bin separately, in dB.
pub fn per_bin_misalignment_db(noisy: &SpectrumMatrix, clean: &SpectrumMatrix) -> Result<Vec<f64>> {
    if noisy.bins != clean.bins {
        return Err(Error::Dimension("spectra cover different bins".into()));
    }
    Ok(noisy
        .mats
        .iter()
        .zip(&clean.mats)
        .map(|(a, b)| 10.0 * ((a - b).norm_squared() / b.norm_squared()).log10())
        .collect())
}
