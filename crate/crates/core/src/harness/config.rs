use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::{LoudspeakerArrayConfig, MicrophoneArrayConfig, DEFAULT_AIR_DENSITY, DEFAULT_SOUND_SPEED};
use crate::error::{Error, Result};
use crate::music::DEFAULT_MIN_SEPARATION_DEG;
use crate::room::{SceneConfig, ShoeboxRoom};
use crate::sh::sh_channels;
use crate::smoothing::SmoothingMethod;
use crate::synthesis::{NoiseSpec, WindowSpec, DEFAULT_CONDITIONING_FLOOR};

/// The canonical configuration of the four reference experiments.
pub const PAPER_CONFIG: &str = include_str!("../../paper.cfg");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub room_dims: [f64; 3],
    pub wall_reflection: f64,
    pub mic_pos: [f64; 3],
    pub loudspeaker_pos: [f64; 3],
    pub sound_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoudspeakerSection {
    pub radius_m: f64,
    pub order: usize,
    pub aperture_rad: f64,
    pub air_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrophoneSection {
    pub radius_m: f64,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub fs: f64,
    pub n_fft: usize,
    /// Images up to this delay are synthesized.
    pub image_horizon_s: f64,
    pub window_start_s: f64,
    pub window_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub misalignment_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub method: SmoothingMethod,
    /// Single analysis frequency for modal smoothing.
    pub frequency_hz: f64,
    /// Closed band for frequency and combined smoothing.
    pub band_hz: [f64; 2],
    /// Loudspeaker order kept after truncation; the full order when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_order: Option<usize>,
    /// Number of signals used for the subspace split.
    pub signals: usize,
    /// Split with the estimated count instead of `signals`.
    #[serde(default)]
    pub use_estimated_count: bool,
    pub grid_deg: f64,
    pub min_separation_deg: f64,
    pub conditioning_floor: f64,
    /// DOA error accepted as a successful localization.
    pub tolerance_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneSection,
    pub loudspeaker: LoudspeakerSection,
    pub microphone: MicrophoneSection,
    pub signal: SignalSection,
    pub noise: NoiseSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scene = SceneConfig::default();
        let ls = LoudspeakerArrayConfig::default();
        let mic = MicrophoneArrayConfig::default();
        let window = WindowSpec::default();
        let noise = NoiseSpec::default();
        Self {
            scene: SceneSection {
                room_dims: scene.room.dims,
                wall_reflection: scene.room.wall_reflection,
                mic_pos: scene.mic_pos,
                loudspeaker_pos: scene.loudspeaker_pos,
                sound_speed: DEFAULT_SOUND_SPEED,
            },
            loudspeaker: LoudspeakerSection {
                radius_m: ls.radius_m,
                order: ls.order,
                aperture_rad: ls.aperture_rad,
                air_density: DEFAULT_AIR_DENSITY,
            },
            microphone: MicrophoneSection {
                radius_m: mic.radius_m,
                order: mic.order,
            },
            signal: SignalSection {
                fs: 48_000.0,
                n_fft: 65_536,
                image_horizon_s: 0.15,
                window_start_s: window.start_s,
                window_length: window.length_samples,
            },
            noise: NoiseSection {
                misalignment_db: -30.0,
                seed: noise.seed,
            },
            analysis: AnalysisSection {
                method: SmoothingMethod::Modal,
                frequency_hz: 1600.0,
                band_hz: [1000.0, 1600.0],
                truncation_order: None,
                signals: 6,
                use_estimated_count: false,
                grid_deg: 1.0,
                min_separation_deg: DEFAULT_MIN_SEPARATION_DEG,
                conditioning_floor: DEFAULT_CONDITIONING_FLOOR,
                tolerance_deg: 2.0,
            },
            output: OutputSection {
                dir: PathBuf::from("out"),
            },
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn paper() -> Self {
        Self::from_toml(PAPER_CONFIG).expect("shipped configuration is valid")
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            room: ShoeboxRoom {
                dims: self.scene.room_dims,
                wall_reflection: self.scene.wall_reflection,
            },
            mic_pos: self.scene.mic_pos,
            loudspeaker_pos: self.scene.loudspeaker_pos,
            sound_speed: self.scene.sound_speed,
        }
    }

    pub fn loudspeaker_config(&self) -> LoudspeakerArrayConfig {
        LoudspeakerArrayConfig {
            radius_m: self.loudspeaker.radius_m,
            order: self.loudspeaker.order,
            aperture_rad: self.loudspeaker.aperture_rad,
            air_density: self.loudspeaker.air_density,
            sound_speed: self.scene.sound_speed,
        }
    }

    pub fn microphone_config(&self) -> MicrophoneArrayConfig {
        MicrophoneArrayConfig {
            radius_m: self.microphone.radius_m,
            order: self.microphone.order,
            sound_speed: self.scene.sound_speed,
        }
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec {
            start_s: self.signal.window_start_s,
            length_samples: self.signal.window_length,
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            misalignment_db: self.noise.misalignment_db,
            seed: self.noise.seed,
        }
    }

    /// Loudspeaker order after truncation.
    pub fn effective_loudspeaker_order(&self) -> usize {
        self.analysis.truncation_order.unwrap_or(self.loudspeaker.order)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.loudspeaker_config().validate()?;
        self.microphone_config().validate()?;
        positive("air density", self.loudspeaker.air_density)?;
        let s = &self.signal;
        positive("sampling rate", s.fs)?;
        positive("image horizon", s.image_horizon_s)?;
        if s.n_fft < 4 || !s.n_fft.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_fft must be even and at least 4, got {}",
                s.n_fft
            )));
        }
        if s.image_horizon_s * s.fs >= s.n_fft as f64 {
            return Err(Error::Config(format!(
                "image horizon {} s does not fit in {} samples",
                s.image_horizon_s, s.n_fft
            )));
        }
        if !(s.window_start_s >= 0.0) || s.window_length == 0 {
            return Err(Error::Config("window must start at t >= 0 with positive length".into()));
        }
        let w = self.window();
        if w.start_sample(s.fs) + w.length_samples > s.n_fft {
            return Err(Error::Config("window extends beyond the DFT length".into()));
        }
        if w.end_s(s.fs) > s.image_horizon_s {
            return Err(Error::Config("window ends after the image horizon".into()));
        }
        if self.noise.misalignment_db.is_nan() || self.noise.misalignment_db > 0.0 {
            return Err(Error::Config("misalignment must be a non-positive number of dB".into()));
        }
        let a = &self.analysis;
        let nyquist = s.fs / 2.0;
        if !(a.frequency_hz > 0.0 && a.frequency_hz < nyquist) {
            return Err(Error::Config(format!(
                "analysis frequency {} outside (0, fs/2)",
                a.frequency_hz
            )));
        }
        if !(a.band_hz[0] > 0.0 && a.band_hz[0] <= a.band_hz[1] && a.band_hz[1] < nyquist) {
            return Err(Error::Config(format!(
                "analysis band {:?} outside (0, fs/2)",
                a.band_hz
            )));
        }
        if self.effective_loudspeaker_order() > self.loudspeaker.order {
            return Err(Error::Config("truncation order exceeds loudspeaker order".into()));
        }
        let dim = sh_channels(self.microphone.order);
        if a.signals == 0 || a.signals >= dim {
            return Err(Error::Config(format!("signal count must lie in 1..{dim}")));
        }
        positive("grid resolution", a.grid_deg)?;
        positive("conditioning floor", a.conditioning_floor)?;
        positive("tolerance", a.tolerance_deg)?;
        if !(a.min_separation_deg >= 0.0) {
            return Err(Error::Config("peak separation must be non-negative".into()));
        }
        Ok(())
    }
}
