mod common;

use std::f64::consts::PI;

use common::*;
use modal_smoothing::array::matrix_b;
use modal_smoothing::room::{enumerate_images, Reflection, SceneConfig};
use modal_smoothing::sh::steering_vector;
use modal_smoothing::synthesis::{
    apply_time_window, assemble_a, assemble_h, assemble_h_factored, forward_dft, inverse_dft, plane_wave_decompose,
    synthesize_broadband, synthesize_broadband_a, SpectrumMatrix, TransferModel, WindowSpec,
    DEFAULT_CONDITIONING_FLOOR,
};
use modal_smoothing::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn singular_ratios(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.iter().map(|v| v / s[0]).collect()
}

fn numerical_rank(m: &DMatrix<Complex64>) -> usize {
    singular_ratios(m).iter().filter(|r| **r > 1e-8).count()
}

#[test]
fn three_assembly_routes_agree() {
    let refl = reference_reflections();
    let (mic, ls) = (microphone(), loudspeaker());
    let model = TransferModel::new(&refl, &mic, &ls).unwrap();
    for f in [150.0, 1600.0, 7000.0, 20000.0] {
        let w = 2.0 * PI * f;
        let sum = assemble_h(w, &refl, &mic, &ls).unwrap();
        assert!(rel_err(&assemble_h_factored(w, &refl, &mic, &ls).unwrap(), &sum) < 1e-12);
        assert!(rel_err(&model.transfer_h(w).unwrap(), &sum) < 1e-12);
        assert!(rel_err(&model.transfer_a(w).unwrap(), &assemble_a(w, &refl, &mic, &ls).unwrap()) < 1e-12);
    }
}

#[test]
fn empty_reflection_list_rejected() {
    let (mic, ls) = (microphone(), loudspeaker());
    assert!(matches!(assemble_h(1.0, &[], &mic, &ls), Err(Error::Empty(_))));
    assert!(matches!(assemble_h_factored(1.0, &[], &mic, &ls), Err(Error::Empty(_))));
    assert!(TransferModel::new(&[], &mic, &ls).is_err());
}

#[test]
fn single_reflection_is_rank_one() {
    let refl = &reference_reflections()[..1];
    let h = assemble_h(OMEGA_1600, refl, &microphone(), &loudspeaker()).unwrap();
    assert!(singular_ratios(&h)[1] < 1e-10);
}

#[test]
fn reference_scene_rank_six() {
    let refl = reference_reflections();
    let (mic, ls) = (microphone(), loudspeaker());
    assert_eq!(numerical_rank(&assemble_h(OMEGA_1600, &refl, &mic, &ls).unwrap()), 6);
    assert_eq!(numerical_rank(&assemble_a(OMEGA_1600, &refl, &mic, &ls).unwrap()), 6);
}

#[test]
fn a_is_h_without_microphone_radial() {
    let refl = reference_reflections();
    let (mic, ls) = (microphone(), loudspeaker());
    for f in [500.0, 1600.0, 4000.0] {
        let w = 2.0 * PI * f;
        let h = assemble_h(w, &refl, &mic, &ls).unwrap();
        let b_inv = matrix_b(w, &mic).unwrap().try_inverse().unwrap();
        assert!(rel_err(&(b_inv * h), &assemble_a(w, &refl, &mic, &ls).unwrap()) < 1e-12);
    }
}

#[test]
fn equal_delay_pair_is_rank_two() {
    let refl = reference_reflections();
    let pair = &refl[2..4];
    assert!((pair[0].delay_s - pair[1].delay_s).abs() < 1e-9);
    let a = assemble_a(OMEGA_1600, pair, &microphone(), &loudspeaker()).unwrap();
    assert_eq!(numerical_rank(&a), 2);
}

#[test]
fn plane_wave_decomposition_recovers_a() {
    let refl = reference_reflections();
    let (mic, ls) = (microphone(), loudspeaker());
    let one = &refl[..1];
    let model = TransferModel::new(one, &mic, &ls).unwrap();
    let spec = synthesize_broadband(&model, 48_000.0, 4096)
        .unwrap()
        .select_band(1000.0, 2000.0);
    let a = plane_wave_decompose(&spec, &mic, DEFAULT_CONDITIONING_FLOOR).unwrap();
    let y = steering_vector(&one[0].doa, mic.order).coeffs.conjugate()
        * steering_vector(&one[0].dor, ls.order).coeffs.transpose();
    for (i, m) in a.mats.iter().enumerate() {
        let w = 2.0 * PI * a.freq(i);
        let g = modal_smoothing::array::matrix_g(w, &ls).unwrap();
        let want = &y * g * Complex64::from_polar(one[0].amplitude, w * one[0].delay_s);
        assert!(rel_err(m, &want) < 1e-12);
    }
}

#[test]
fn decomposition_reports_conditioning() {
    let mic = microphone();
    let low = SpectrumMatrix {
        fs: 48_000.0,
        n_fft: 65_536,
        bins: vec![1],
        mats: vec![DMatrix::from_element(9, 16, Complex64::new(1.0, 0.0))],
    };
    match plane_wave_decompose(&low, &mic, DEFAULT_CONDITIONING_FLOOR) {
        Err(Error::Conditioning { order, freq_hz, .. }) => {
            assert!(order >= 1);
            assert!(freq_hz < 1.0);
        }
        other => panic!("expected a conditioning error, got {other:?}"),
    }
    let b = modal_smoothing::array::b_diagonal(OMEGA_1600, &mic).unwrap();
    let peak = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(b.iter().all(|v| v.norm() >= DEFAULT_CONDITIONING_FLOOR * peak));
}

fn small_scene() -> (Vec<Reflection>, TransferModel) {
    let refl = enumerate_images(&SceneConfig::default(), 0.06).unwrap();
    let model = TransferModel::new(&refl, &microphone(), &loudspeaker()).unwrap();
    (refl, model)
}

#[test]
fn broadband_bins_are_conjugate_symmetric_and_real() {
    let (_, model) = small_scene();
    let spec = synthesize_broadband(&model, 48_000.0, 4096).unwrap();
    assert!(spec.is_full_one_sided());
    assert!(spec.mats[0].iter().all(|v| v.norm() == 0.0));
    assert!(spec.mats[2048].iter().all(|v| v.norm() == 0.0));
    for k in [1, 100, 2047] {
        assert_eq!(spec.full_bin(4096 - k).unwrap(), spec.mats[k].map(|v| v.conj()));
    }
    let ir = inverse_dft(&spec).unwrap();
    let back = forward_dft(&ir).unwrap();
    for (a, b) in back.mats.iter().zip(&spec.mats).skip(1).take(2046) {
        assert!(rel_err(a, b) < 1e-10);
    }
}

#[test]
fn short_dft_rejected() {
    let (_, model) = small_scene();
    assert!(matches!(
        synthesize_broadband(&model, 48_000.0, 2048),
        Err(Error::DftTooShort { .. })
    ));
    assert!(synthesize_broadband(&model, 48_000.0, 4097).is_err());
    assert!(synthesize_broadband(&model, 0.0, 4096).is_err());
}

/// The loudspeaker radial function references the array surface, so the
/// omnidirectional channel of `A` arrives `r_L / c` ahead of the centre delay.
#[test]
fn omnidirectional_channel_peaks_at_the_surface_delay() {
    let fs = 48_000.0;
    let mut r = reference_reflections()[0].clone();
    for delay_samples in [600.0, 777.0, 1000.4] {
        r.delay_s = delay_samples / fs;
        r.amplitude = 1.0;
        let model = TransferModel::new(std::slice::from_ref(&r), &microphone(), &loudspeaker()).unwrap();
        let spec = synthesize_broadband_a(&model, fs, 4096).unwrap();
        let h = inverse_dft(&spec.entry_spectrum(0, 0)).unwrap();
        let x = h.entry(0, 0);
        let peak = (0..x.len()).max_by(|a, b| x[*a].abs().total_cmp(&x[*b].abs())).unwrap();
        let lead = loudspeaker().radius_m / 343.0 * fs;
        assert_eq!(peak, (delay_samples - lead).round() as usize);
    }
}

fn energy_near(x: &[f64], fs: f64, t: f64) -> f64 {
    let c = (t * fs).round() as usize;
    x[c - 10..=c + 10].iter().map(|v| v * v).sum()
}

#[test]
fn coincident_pairs_raise_the_level() {
    let fs = 48_000.0;
    let (refl, model) = small_scene();
    let full = inverse_dft(&synthesize_broadband(&model, fs, 4096).unwrap().entry_spectrum(0, 0)).unwrap();
    // drop one member of each coincident pair
    let pairs = reference_reflections();
    let thinned: Vec<Reflection> = refl
        .iter()
        .filter(|r| **r != pairs[3] && **r != pairs[5])
        .cloned()
        .collect();
    let model = TransferModel::new(&thinned, &microphone(), &loudspeaker()).unwrap();
    let half = inverse_dft(&synthesize_broadband(&model, fs, 4096).unwrap().entry_spectrum(0, 0)).unwrap();
    for t in [pairs[2].delay_s, pairs[4].delay_s] {
        let gain = 10.0 * (energy_near(full.entry(0, 0), fs, t) / energy_near(half.entry(0, 0), fs, t)).log10();
        assert!(gain > 4.0, "pair at {t} raised by {gain} dB");
    }
}

fn spikes(n_fft: usize, fs: f64, at: &[(usize, f64)]) -> SpectrumMatrix {
    SpectrumMatrix {
        fs,
        n_fft,
        bins: (0..=n_fft / 2).collect(),
        mats: (0..=n_fft / 2)
            .map(|k| {
                let w = 2.0 * PI * k as f64 / n_fft as f64;
                let v: Complex64 = at.iter().map(|(t, a)| Complex64::from_polar(*a, w * *t as f64)).sum();
                DMatrix::from_element(1, 1, v)
            })
            .collect(),
    }
}

#[test]
fn window_two_spike_oracle() {
    let fs = 48_000.0;
    let win = WindowSpec::default();
    let spec = spikes(4096, fs, &[(619, 1.0), (1920, 1.0)]);
    let out = inverse_dft(&apply_time_window(&spec, &win).unwrap()).unwrap();
    let x = out.entry(0, 0);
    let c = (1055.0f64) / 2.0;
    let expected = 1.0 - ((619.0 - 336.0 - c) / c).powi(2);
    assert!((x[619] - expected).abs() < 1e-12);
    let outside = x[1920].abs().max(1e-300);
    assert!(20.0 * outside.log10() < -60.0);
}

#[test]
fn window_apex_and_edges() {
    let fs = 48_000.0;
    // odd length puts a sample at the apex
    let win = WindowSpec {
        start_s: 0.007,
        length_samples: 1055,
    };
    let spec = spikes(4096, fs, &[(336 + 527, 1.0)]);
    let x = inverse_dft(&apply_time_window(&spec, &win).unwrap()).unwrap();
    assert!((x.entry(0, 0)[863] - 1.0).abs() < 1e-12);
    for edge in [336, 336 + 1054] {
        let spec = spikes(4096, fs, &[(edge, 1.0)]);
        let x = inverse_dft(&apply_time_window(&spec, &win).unwrap()).unwrap();
        assert!(x.entry(0, 0).iter().all(|v| v.abs() < 1e-12));
    }
}

/// Every out-of-window image, read at its own arrival sample, falls more than
/// 40 dB below its unwindowed level; the six in-window reflections remain.
#[test]
fn window_retains_only_the_six_reflections() {
    let fs = 48_000.0;
    let win = WindowSpec::default();
    let all = enumerate_images(&SceneConfig::default(), 0.15).unwrap();
    let model = TransferModel::new(&all, &microphone(), &loudspeaker()).unwrap();
    let h = synthesize_broadband(&model, fs, 8192).unwrap();
    let raw = inverse_dft(&h).unwrap();
    let gated = inverse_dft(&apply_time_window(&h, &win).unwrap()).unwrap();
    let level = |ir: &modal_smoothing::synthesis::ImpulseResponses, t: usize| {
        ir.channels.iter().map(|c| c[t] * c[t]).sum::<f64>().sqrt()
    };
    let (start, end) = (0.007, win.end_s(fs));
    let mut kept = 0;
    for r in &all {
        let t = (r.delay_s * fs).round() as usize;
        let ratio = 20.0 * (level(&gated, t) / level(&raw, t)).log10();
        if r.delay_s >= start && r.delay_s <= end {
            kept += 1;
            assert!(
                ratio > -10.0,
                "in-window image at {} s dropped to {ratio} dB",
                r.delay_s
            );
        } else {
            assert!(ratio < -40.0, "image at {} s only {ratio} dB down", r.delay_s);
        }
    }
    assert_eq!(kept, 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembly_is_linear(seed in any::<u64>(), n1 in 1usize..5, n2 in 1usize..5, f in 100.0f64..10_000.0) {
        let mut rng = rng(seed);
        let (mic, ls) = (microphone(), loudspeaker());
        let a = random_reflections(&mut rng, n1);
        let b = random_reflections(&mut rng, n2);
        let both: Vec<Reflection> = a.iter().chain(&b).cloned().collect();
        let w = 2.0 * PI * f;
        let sum = assemble_h(w, &a, &mic, &ls).unwrap() + assemble_h(w, &b, &mic, &ls).unwrap();
        prop_assert!(rel_err(&assemble_h(w, &both, &mic, &ls).unwrap(), &sum) < 1e-12);
    }

    #[test]
    fn noiseless_rank_matches_reflection_count(seed in any::<u64>(), l in 1usize..=8) {
        let refl = random_separated_reflections(&mut rng(seed), l, 20.0);
        let (mic, ls) = (microphone(), loudspeaker());
        let expected = l.min(16).min(9);
        for m in [assemble_h(OMEGA_1600, &refl, &mic, &ls).unwrap(), assemble_a(OMEGA_1600, &refl, &mic, &ls).unwrap()] {
            let s = singular_ratios(&m);
            prop_assert!(s[expected - 1] > 1e-8);
            if expected < s.len() {
                prop_assert!(s[expected] < 1e-8);
            }
        }
    }

    #[test]
    fn direction_of_single_reflection_is_recovered(seed in any::<u64>()) {
        let refl = random_reflections(&mut rng(seed), 1);
        let a = assemble_a(OMEGA_1600, &refl, &microphone(), &loudspeaker()).unwrap();
        // the column space is spanned by conj(y(θ))
        let y = steering_vector(&refl[0].doa, 2).coeffs.conjugate();
        let col = a.column(0).into_owned();
        let proj = y.dotc(&col) / y.norm_squared();
        prop_assert!((&col - &y * proj).norm() < 1e-10 * col.norm().max(1e-300));
    }
}
