mod common;

use std::f64::consts::PI;

use common::*;
use modal_smoothing::music::hermitian_eig;
use modal_smoothing::room::Reflection;
use modal_smoothing::smoothing::{
    combined_smooth, frequency_smooth, frequency_smooth_spectrum, modal_smooth, modal_smooth_channel_sum, modal_vector,
    truncate_loudspeaker_order, CrossSpectrum, DOMINANT_THRESHOLD,
};
use modal_smoothing::synthesis::{steering_matrix, BeamformingVector, SpectrumMatrix, TransferModel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

const N_FFT: usize = 65_536;
const FS: f64 = 48_000.0;

/// Noiseless `A` over the DFT bins of the analysis band.
fn band_a(refl: &[Reflection]) -> SpectrumMatrix {
    let model = TransferModel::new(refl, &microphone(), &loudspeaker()).unwrap();
    let df = FS / N_FFT as f64;
    let bins: Vec<usize> = ((1000.0 / df).ceil() as usize..=(1600.0 / df).floor() as usize).collect();
    let mats = bins
        .iter()
        .map(|k| model.transfer_a(2.0 * PI * *k as f64 * df).unwrap())
        .collect();
    SpectrumMatrix {
        fs: FS,
        n_fft: N_FFT,
        bins,
        mats,
    }
}

fn count(s: &CrossSpectrum) -> usize {
    hermitian_eig(s).unwrap().dominant_count(DOMINANT_THRESHOLD)
}

fn omni_fs(a: &SpectrumMatrix, order: usize) -> CrossSpectrum {
    frequency_smooth_spectrum(a, &BeamformingVector::omnidirectional(order)).unwrap()
}

#[test]
fn reference_scene_counts() {
    let refl = reference_reflections();
    let a = band_a(&refl);
    assert_eq!(count(&omni_fs(&a, 3)), 4);
    let at_1600 = a.select_nearest(1600.0).mats[0].clone();
    assert_eq!(count(&modal_smooth(&at_1600, 3).unwrap()), 6);
    let low = truncate_loudspeaker_order(&at_1600, 1).unwrap();
    assert_eq!(low.shape(), (9, 4));
    assert_eq!(count(&modal_smooth(&low, 1).unwrap()), 4);
    let low_band: Vec<DMatrix<Complex64>> = a
        .mats
        .iter()
        .map(|m| truncate_loudspeaker_order(m, 1).unwrap())
        .collect();
    assert_eq!(count(&combined_smooth(&low_band, 1).unwrap()), 6);
}

#[test]
fn equal_delay_pair_defeats_frequency_smoothing() {
    let refl = reference_reflections();
    let a = band_a(&refl[2..4]);
    let eig = hermitian_eig(&omni_fs(&a, 3)).unwrap();
    assert!(eig.values[1] / eig.values[0] < 1e-8);
}

/// Reflections in `groups` of equal delay; each group adds one delay signature.
fn grouped(groups: &[usize], seed: u64) -> Vec<Reflection> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for (g, size) in groups.iter().enumerate() {
        let delay = 0.008 + 0.003 * g as f64;
        for mut r in random_separated_reflections(&mut rng, *size, 20.0) {
            r.delay_s = delay;
            out.push(r);
        }
    }
    out
}

#[test]
fn frequency_smoothing_counts_delay_signatures() {
    for (groups, signatures) in [
        (vec![2], 1),
        (vec![1, 1], 2),
        (vec![2, 2], 2),
        (vec![1, 1, 2], 3),
        (vec![1, 1, 2, 2], 4),
        (vec![1; 6], 6),
    ] {
        let refl = grouped(&groups, groups.len() as u64);
        let a = band_a(&refl);
        assert_eq!(count(&omni_fs(&a, 3)), signatures, "groups {groups:?}");
        let at_1600 = a.select_nearest(1600.0).mats[0].clone();
        assert_eq!(
            count(&modal_smooth(&at_1600, 3).unwrap()),
            refl.len(),
            "groups {groups:?}"
        );
    }
}

#[test]
fn combined_is_frequency_average_of_modal() {
    let a = band_a(&reference_reflections());
    let combined = combined_smooth(&a.mats, 3).unwrap();
    let mut acc = DMatrix::<Complex64>::zeros(9, 9);
    for m in &a.mats {
        acc += m * m.adjoint() / Complex64::new(16.0, 0.0);
    }
    acc /= Complex64::new(a.len() as f64, 0.0);
    assert!((&combined.mat - &acc).norm() / acc.norm() < 1e-12);
    let single = combined_smooth(&a.mats[..1], 3).unwrap();
    assert!((single.mat - modal_smooth(&a.mats[0], 3).unwrap().mat).norm() < 1e-15 * acc.norm().max(1.0));
}

#[test]
fn frequency_smoothing_of_omni_column() {
    let a = band_a(&reference_reflections());
    let snaps: Vec<DVector<Complex64>> = a.mats.iter().map(|m| modal_vector(m, 0, 0).unwrap()).collect();
    let direct = frequency_smooth(&snaps).unwrap();
    let via_spectrum = omni_fs(&a, 3);
    assert!((&direct.mat - &via_spectrum.mat).norm() <= 1e-14 * direct.mat.norm());
    assert_eq!(via_spectrum.meta.terms, a.len());
}

#[test]
fn channel_sum_on_random_rooms() {
    let mut rng = rng(11);
    for l in 1..=10 {
        let refl = random_room_reflections(&mut rng, l);
        let a = band_a(&refl).select_nearest(1600.0).mats[0].clone();
        let closed = modal_smooth(&a, 3).unwrap();
        let sum = modal_smooth_channel_sum(&a, 3).unwrap();
        assert!((&sum.mat - &closed.mat).norm() / closed.mat.norm() < 1e-12);
    }
}

fn assert_hermitian_psd(s: &CrossSpectrum) -> Result<(), TestCaseError> {
    prop_assert!(s.hermitian_residual() < 1e-12);
    let eig = hermitian_eig(s).unwrap();
    let floor = -1e-10 * s.trace();
    prop_assert!(eig.values.iter().all(|v| *v >= floor));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimators_are_hermitian_psd(seed in any::<u64>(), l in 1usize..=8) {
        let refl = random_reflections(&mut rng(seed), l);
        let model = TransferModel::new(&refl, &microphone(), &loudspeaker()).unwrap();
        let mats: Vec<DMatrix<Complex64>> =
            (0..5).map(|k| model.transfer_a(2.0 * PI * (1000.0 + 150.0 * k as f64)).unwrap()).collect();
        assert_hermitian_psd(&modal_smooth(&mats[0], 3).unwrap())?;
        assert_hermitian_psd(&combined_smooth(&mats, 3).unwrap())?;
        let snaps: Vec<DVector<Complex64>> = mats.iter().map(|m| m.column(0).into_owned()).collect();
        assert_hermitian_psd(&frequency_smooth(&snaps).unwrap())?;
    }

    #[test]
    fn modal_rank_equals_reflection_count(seed in any::<u64>(), l in 1usize..=8) {
        let refl = random_separated_reflections(&mut rng(seed), l, 20.0);
        let model = TransferModel::new(&refl, &microphone(), &loudspeaker()).unwrap();
        let a = model.transfer_a(OMEGA_1600).unwrap();
        prop_assert_eq!(count(&modal_smooth(&a, 3).unwrap()), l.min(9).min(16));
    }

    #[test]
    fn signal_subspace_is_steering_span(seed in any::<u64>(), l in 1usize..=6) {
        let refl = random_separated_reflections(&mut rng(seed), l, 20.0);
        let model = TransferModel::new(&refl, &microphone(), &loudspeaker()).unwrap();
        let a = model.transfer_a(OMEGA_1600).unwrap();
        let eig = hermitian_eig(&modal_smooth(&a, 3).unwrap()).unwrap();
        let us = eig.vectors.columns(0, l).into_owned();
        let q = steering_matrix(refl.iter().map(|r| r.doa), 2, l).adjoint().qr().q();
        let residual = &us - &q * (q.adjoint() * &us);
        let sine = residual.singular_values().max();
        prop_assert!(sine.min(1.0).asin() < 1e-6);
    }
}
