use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("DFT length {n_fft} too short for reflection delay of {delay_samples:.1} samples")]
    DftTooShort { n_fft: usize, delay_samples: f64 },

    #[error("window [{start}, {end}) exceeds response length {n_fft}")]
    WindowOutOfRange { start: usize, end: usize, n_fft: usize },

    #[error(
        "plane-wave decomposition ill-conditioned at {freq_hz:.2} Hz: |b_{order}| = {magnitude:.3e} below floor {floor:.3e}"
    )]
    Conditioning {
        freq_hz: f64,
        order: usize,
        magnitude: f64,
        floor: f64,
    },

    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),

    #[error("no noise subspace: signal count {signals} with dimension {dim}")]
    NoNoiseSubspace { signals: usize, dim: usize },

    #[error("found {found} spectrum peaks, {requested} requested")]
    PeakDeficit {
        found: usize,
        requested: usize,
        partial: crate::music::DoaEstimate,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
