//! Radial functions of the spherical loudspeaker array (rigid sphere with
//! spherical-cap membranes) and the rigid-sphere microphone array, and the
//! diagonal matrices `G(ω)` and `B(ω)` built from them.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sh::{legendre_p, sh_channels, sph_bessel_j, sph_bessel_j_prime, sph_hankel1_h, sph_hankel1_h_prime};

pub const DEFAULT_SOUND_SPEED: f64 = 343.0;
pub const DEFAULT_AIR_DENSITY: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoudspeakerArrayConfig {
    pub radius_m: f64,
    pub order: usize,
    /// Half-angle of each spherical-cap membrane.
    pub aperture_rad: f64,
    pub air_density: f64,
    pub sound_speed: f64,
}

impl LoudspeakerArrayConfig {
    /// Aperture of a flat membrane of the given diameter mounted on a sphere
    /// of the given radius, taking the diameter as the chord of the cap.
    pub fn aperture_from_membrane(diameter_m: f64, radius_m: f64) -> f64 {
        (0.5 * diameter_m / radius_m).clamp(-1.0, 1.0).asin()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) {
            return Err(Error::Config(format!(
                "loudspeaker radius {} must be positive",
                self.radius_m
            )));
        }
        if !(self.aperture_rad > 0.0 && self.aperture_rad < PI / 2.0) {
            return Err(Error::Config(format!(
                "cap aperture {} rad outside (0, pi/2)",
                self.aperture_rad
            )));
        }
        if !(self.air_density > 0.0) || !(self.sound_speed > 0.0) {
            return Err(Error::Config("air density and sound speed must be positive".into()));
        }
        Ok(())
    }
}

impl Default for LoudspeakerArrayConfig {
    fn default() -> Self {
        Self {
            radius_m: 0.1,
            order: 3,
            aperture_rad: Self::aperture_from_membrane(0.0508, 0.1),
            air_density: DEFAULT_AIR_DENSITY,
            sound_speed: DEFAULT_SOUND_SPEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrophoneArrayConfig {
    pub radius_m: f64,
    pub order: usize,
    pub sound_speed: f64,
}

impl MicrophoneArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) || !(self.sound_speed > 0.0) {
            return Err(Error::Config(
                "microphone radius and sound speed must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for MicrophoneArrayConfig {
    fn default() -> Self {
        Self {
            radius_m: 0.07,
            order: 2,
            sound_speed: DEFAULT_SOUND_SPEED,
        }
    }
}

/// Cap coefficient `q_n(α)`.
pub fn cap_coefficient(n: usize, aperture_rad: f64) -> f64 {
    let ca = aperture_rad.cos();
    if n == 0 {
        4.0 * PI * PI * (1.0 - ca)
    } else {
        let pm = legendre_p(n - 1, ca).unwrap_or(0.0);
        let pp = legendre_p(n + 1, ca).unwrap_or(0.0);
        4.0 * PI * PI / (2 * n + 1) as f64 * (pm - pp)
    }
}

/// `j_n(x) - j_n'(x) / h_n'(x) · h_n(x)`, the rigid-sphere bracket shared by
/// both radial functions.
fn rigid_bracket(n: usize, x: f64) -> Result<Complex64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("radial function needs kr > 0, got {x}")));
    }
    let hp = sph_hankel1_h_prime(n, x)?;
    let h = sph_hankel1_h(n, x)?;
    Ok(sph_bessel_j(n, x) - sph_bessel_j_prime(n, x) / hp * h)
}

/// `(-i)^p`.
fn neg_i_pow(p: usize) -> Complex64 {
    match p % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Loudspeaker radial function `g_n(k r_L)` for voltage input.
pub fn loudspeaker_radial_g(n: usize, k_rl: f64, cfg: &LoudspeakerArrayConfig) -> Result<Complex64> {
    let prefactor = cfg.air_density * cfg.sound_speed * cfg.radius_m * cfg.radius_m;
    Ok(prefactor * neg_i_pow(n + 1) * rigid_bracket(n, k_rl)? * cap_coefficient(n, cfg.aperture_rad))
}

/// Rigid-sphere microphone radial function `b_n(k r_M)`.
pub fn mic_radial_b(n: usize, k_rm: f64) -> Result<Complex64> {
    Ok(4.0 * PI * neg_i_pow(n) * rigid_bracket(n, k_rm)?)
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "angular frequency must be positive, got {omega}"
        )));
    }
    Ok(())
}

/// Diagonal of `G(ω)`: `g_n` repeated `2n+1` times in channel order.
pub fn g_diagonal(omega: f64, cfg: &LoudspeakerArrayConfig) -> Result<Vec<Complex64>> {
    check_omega(omega)?;
    let x = omega * cfg.radius_m / cfg.sound_speed;
    let mut out = Vec::with_capacity(sh_channels(cfg.order));
    for n in 0..=cfg.order {
        let g = loudspeaker_radial_g(n, x, cfg)?;
        out.extend(std::iter::repeat_n(g, 2 * n + 1));
    }
    Ok(out)
}

/// Diagonal of `B(ω)`: `b_n` repeated `2n+1` times in channel order.
pub fn b_diagonal(omega: f64, cfg: &MicrophoneArrayConfig) -> Result<Vec<Complex64>> {
    check_omega(omega)?;
    let x = omega * cfg.radius_m / cfg.sound_speed;
    let mut out = Vec::with_capacity(sh_channels(cfg.order));
    for n in 0..=cfg.order {
        let b = mic_radial_b(n, x)?;
        out.extend(std::iter::repeat_n(b, 2 * n + 1));
    }
    Ok(out)
}

pub fn matrix_g(omega: f64, cfg: &LoudspeakerArrayConfig) -> Result<DMatrix<Complex64>> {
    let d = g_diagonal(omega, cfg)?;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}

pub fn matrix_b(omega: f64, cfg: &MicrophoneArrayConfig) -> Result<DMatrix<Complex64>> {
    let d = b_diagonal(omega, cfg)?;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}
