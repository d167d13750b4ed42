//! Shoebox image-source model.
//!
//! Each image is described per axis by an integer `a` and a branch sign `s`:
//! the image coordinate is `2 a L + s x_src`, and the number of wall bounces
//! along that axis is `|2a|` for `s = +1` and `|2a - 1|` for `s = -1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::DEFAULT_SOUND_SPEED;
use crate::error::{Error, Result};
use crate::sh::SphericalAngle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShoeboxRoom {
    pub dims: [f64; 3],
    /// Pressure reflection coefficient applied once per wall bounce.
    pub wall_reflection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub room: ShoeboxRoom,
    pub mic_pos: [f64; 3],
    pub loudspeaker_pos: [f64; 3],
    pub sound_speed: f64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let room = &self.room;
        if room.dims.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Scene(format!(
                "room dimensions {:?} must be positive",
                room.dims
            )));
        }
        if !(0.0..=1.0).contains(&room.wall_reflection) {
            return Err(Error::Scene(format!(
                "wall reflection {} outside [0, 1]",
                room.wall_reflection
            )));
        }
        if !(self.sound_speed > 0.0) {
            return Err(Error::Scene("sound speed must be positive".into()));
        }
        for (name, p) in [("microphone", self.mic_pos), ("loudspeaker", self.loudspeaker_pos)] {
            if (0..3).any(|k| !(p[k] > 0.0 && p[k] < room.dims[k])) {
                return Err(Error::Scene(format!("{name} position {p:?} not strictly inside room")));
            }
        }
        Ok(())
    }
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            room: ShoeboxRoom {
                dims: [10.0, 10.0, 8.0],
                wall_reflection: 0.8,
            },
            mic_pos: [5.0, 5.0, 3.0],
            loudspeaker_pos: [2.0, 2.0, 1.75],
            sound_speed: DEFAULT_SOUND_SPEED,
        }
    }
}

/// One image source as seen from the microphone array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub image_pos: [f64; 3],
    /// `-1` on each axis where the image is mirrored.
    pub mirror_signs: [i8; 3],
    pub bounce_count: u32,
    pub distance_m: f64,
    pub delay_s: f64,
    pub amplitude: f64,
    pub doa: SphericalAngle,
    pub dor: SphericalAngle,
}

/// Arrival direction at the microphone: angles of `M (r_mic - r_image)` with
/// `M = diag(mirror_signs)`.
pub fn doa_of(refl: &Reflection, mic_pos: [f64; 3]) -> Result<SphericalAngle> {
    let v: [f64; 3] = std::array::from_fn(|k| refl.mirror_signs[k] as f64 * (mic_pos[k] - refl.image_pos[k]));
    SphericalAngle::from_cartesian(v)
}

/// Radiation direction: angles of `r_image - r_mic`.
pub fn dor_of(refl: &Reflection, mic_pos: [f64; 3]) -> Result<SphericalAngle> {
    let v: [f64; 3] = std::array::from_fn(|k| refl.image_pos[k] - mic_pos[k]);
    SphericalAngle::from_cartesian(v)
}

/// Propagation factor `amplitude · e^{iω·delay}`.
pub fn lambda_l(refl: &Reflection, omega: f64) -> Complex64 {
    Complex64::from_polar(refl.amplitude, omega * refl.delay_s)
}

#[derive(Debug, Clone, Copy)]
struct AxisImage {
    coord: f64,
    sign: i8,
    bounces: u32,
}

fn axis_images(len: f64, src: f64, mic: f64, reach: f64) -> Vec<AxisImage> {
    let a_max = (reach / (2.0 * len)).ceil() as i64 + 1;
    let mut out = Vec::new();
    for a in -a_max..=a_max {
        for sign in [1i8, -1] {
            let coord = 2.0 * a as f64 * len + sign as f64 * src;
            if (coord - mic).abs() > reach {
                continue;
            }
            let bounces = if sign > 0 {
                (2 * a).unsigned_abs()
            } else {
                (2 * a - 1).unsigned_abs()
            };
            out.push(AxisImage {
                coord,
                sign,
                bounces: bounces as u32,
            });
        }
    }
    out
}

/// All images whose delay does not exceed `max_delay_s`, sorted by delay.
/// Images with equal delay (to 1 ps) are ordered by descending image
/// coordinates, x first.
pub fn enumerate_images(scene: &SceneConfig, max_delay_s: f64) -> Result<Vec<Reflection>> {
    scene.validate()?;
    if !(max_delay_s > 0.0) {
        return Err(Error::Domain(format!("max delay must be positive, got {max_delay_s}")));
    }
    let reach = max_delay_s * scene.sound_speed;
    let per_axis: Vec<Vec<AxisImage>> = (0..3)
        .map(|k| axis_images(scene.room.dims[k], scene.loudspeaker_pos[k], scene.mic_pos[k], reach))
        .collect();

    let mut out = Vec::new();
    for ix in &per_axis[0] {
        for iy in &per_axis[1] {
            for iz in &per_axis[2] {
                let image_pos = [ix.coord, iy.coord, iz.coord];
                let d: f64 = (0..3)
                    .map(|k| (image_pos[k] - scene.mic_pos[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let delay_s = d / scene.sound_speed;
                if delay_s > max_delay_s {
                    continue;
                }
                let bounce_count = ix.bounces + iy.bounces + iz.bounces;
                let mut refl = Reflection {
                    image_pos,
                    mirror_signs: [ix.sign, iy.sign, iz.sign],
                    bounce_count,
                    distance_m: d,
                    delay_s,
                    amplitude: scene.room.wall_reflection.powi(bounce_count as i32) / d,
                    doa: SphericalAngle { theta: 0.0, phi: 0.0 },
                    dor: SphericalAngle { theta: 0.0, phi: 0.0 },
                };
                refl.doa = doa_of(&refl, scene.mic_pos)?;
                refl.dor = dor_of(&refl, scene.mic_pos)?;
                out.push(refl);
            }
        }
    }
    out.sort_by(|a, b| {
        let ka = (a.delay_s * 1e12).round() as i64;
        let kb = (b.delay_s * 1e12).round() as i64;
        ka.cmp(&kb).then_with(|| {
            b.image_pos
                .iter()
                .zip(&a.image_pos)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(out)
}

/// Images with delays inside the closed interval `[start_s, end_s]`.
pub fn reflections_in_window(reflections: &[Reflection], start_s: f64, end_s: f64) -> Vec<Reflection> {
    reflections
        .iter()
        .filter(|r| r.delay_s >= start_s && r.delay_s <= end_s)
        .cloned()
        .collect()
}
