//! Scene builders shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use modal_smoothing::array::{LoudspeakerArrayConfig, MicrophoneArrayConfig};
use modal_smoothing::harness::ExperimentConfig;
use modal_smoothing::room::{enumerate_images, reflections_in_window, Reflection, SceneConfig, ShoeboxRoom};
use modal_smoothing::sh::SphericalAngle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OMEGA_1600: f64 = 2.0 * PI * 1600.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn reference_config() -> ExperimentConfig {
    ExperimentConfig::paper()
}

pub fn loudspeaker() -> LoudspeakerArrayConfig {
    reference_config().loudspeaker_config()
}

pub fn microphone() -> MicrophoneArrayConfig {
    reference_config().microphone_config()
}

/// The six images of the reference scene inside the 7 ms to 29 ms window.
pub fn reference_reflections() -> Vec<Reflection> {
    let all = enumerate_images(&SceneConfig::default(), 0.05).unwrap();
    reflections_in_window(&all, 0.007, 0.029)
}

/// A shoebox scene with both arrays at least 1 m from every wall.
pub fn random_scene(rng: &mut ChaCha8Rng) -> SceneConfig {
    let dims: [f64; 3] = std::array::from_fn(|_| rng.random_range(4.0..12.0));
    let mut pos = || -> [f64; 3] { std::array::from_fn(|k| rng.random_range(1.0..dims[k] - 1.0)) };
    let mic_pos = pos();
    let loudspeaker_pos = pos();
    SceneConfig {
        room: ShoeboxRoom {
            dims,
            wall_reflection: 0.8,
        },
        mic_pos,
        loudspeaker_pos,
        sound_speed: 343.0,
    }
}

/// The `count` earliest images of a random shoebox scene.
pub fn random_room_reflections(rng: &mut ChaCha8Rng, count: usize) -> Vec<Reflection> {
    let scene = random_scene(rng);
    let mut all = enumerate_images(&scene, 0.1).unwrap();
    all.truncate(count);
    assert_eq!(all.len(), count);
    all
}

pub fn random_direction(rng: &mut ChaCha8Rng) -> SphericalAngle {
    let z: f64 = rng.random_range(-1.0..1.0);
    SphericalAngle::new(z.acos(), rng.random_range(0.0..2.0 * PI)).unwrap()
}

/// Reflections with independent random directions, delays and amplitudes.
pub fn random_reflections(rng: &mut ChaCha8Rng, count: usize) -> Vec<Reflection> {
    (0..count)
        .map(|_| {
            let delay_s = rng.random_range(0.005..0.03);
            Reflection {
                image_pos: [0.0; 3],
                mirror_signs: [1; 3],
                bounce_count: 0,
                distance_m: delay_s * 343.0,
                delay_s,
                amplitude: rng.random_range(0.2..1.0),
                doa: random_direction(rng),
                dor: random_direction(rng),
            }
        })
        .collect()
}

/// As [`random_reflections`], redrawn until every pair of arrival directions
/// and every pair of radiation directions is at least `min_sep_deg` apart.
/// Near-coincident directions make the steering vectors nearly parallel and
/// the rank numerically ambiguous.
pub fn random_separated_reflections(rng: &mut ChaCha8Rng, count: usize, min_sep_deg: f64) -> Vec<Reflection> {
    loop {
        let refl = random_reflections(rng, count);
        let separated = |f: fn(&Reflection) -> SphericalAngle| {
            (0..count).all(|i| {
                (i + 1..count)
                    .all(|j| modal_smoothing::music::great_circle_error(&f(&refl[i]), &f(&refl[j])) >= min_sep_deg)
            })
        };
        if separated(|r| r.doa) && separated(|r| r.dor) {
            return refl;
        }
    }
}
