use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::{Analysis, ExperimentConfig, ExperimentSummary, PreparedSpectrum};
use crate::error::{Error, Result};
use crate::music::MusicSpectrum;
use crate::room::Reflection;
use crate::synthesis::export::{write_impulse_csv, write_spectrum_binary, write_spectrum_csv};
use crate::synthesis::{inverse_dft, welch_window};

pub const REFLECTION_COLUMNS: [&str; 10] = [
    "index",
    "delay_s",
    "distance_m",
    "bounce_count",
    "amplitude",
    "mirror_signs",
    "dor_theta_deg",
    "dor_phi_deg",
    "doa_theta_deg",
    "doa_phi_deg",
];

pub const RIR_EXCERPT_COLUMNS: [&str; 5] = ["sample", "time_s", "h00", "window", "h00_windowed"];

/// Length of the RIR excerpt.
const EXCERPT_S: f64 = 0.05;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

/// `reflections.csv`: the in-window images in delay order.
pub fn write_ground_truth(dir: &Path, truth: &[Reflection]) -> Result<Vec<String>> {
    let name = "reflections.csv";
    let mut w = csv::Writer::from_writer(create(&dir.join(name))?);
    w.write_record(REFLECTION_COLUMNS).map_err(csv_err)?;
    for (i, r) in truth.iter().enumerate() {
        let signs = r
            .mirror_signs
            .iter()
            .map(|s| if *s > 0 { "+" } else { "-" })
            .collect::<String>();
        w.write_record(&[
            i.to_string(),
            format!("{:.9}", r.delay_s),
            format!("{:.9}", r.distance_m),
            r.bounce_count.to_string(),
            format!("{:.9}", r.amplitude),
            signs,
            format!("{:.4}", r.dor.theta_deg()),
            format!("{:.4}", r.dor.phi_deg()),
            format!("{:.4}", r.doa.theta_deg()),
            format!("{:.4}", r.doa.phi_deg()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(vec![name.to_string()])
}

/// `rir_excerpt.csv`: channel (0,0)×(0,0) of the noisy RIR with the window.
pub fn write_rir_excerpt(dir: &Path, prepared: &PreparedSpectrum, cfg: &ExperimentConfig) -> Result<String> {
    let name = "rir_excerpt.csv";
    let fs = cfg.signal.fs;
    let raw = inverse_dft(&prepared.noisy.entry_spectrum(0, 0))?;
    let gated = inverse_dft(&prepared.windowed.entry_spectrum(0, 0))?;
    let window = cfg.window();
    let start = window.start_sample(fs);
    let w = welch_window(window.length_samples);
    let len = ((EXCERPT_S * fs).round() as usize).min(raw.len());
    let mut out = csv::Writer::from_writer(create(&dir.join(name))?);
    out.write_record(RIR_EXCERPT_COLUMNS).map_err(csv_err)?;
    for t in 0..len {
        let wv = if t >= start && t < start + w.len() {
            w[t - start]
        } else {
            0.0
        };
        out.write_record(&[
            t.to_string(),
            format!("{:.9}", t as f64 / fs),
            format!("{:e}", raw.entry(0, 0)[t]),
            format!("{wv:.9}"),
            format!("{:e}", gated.entry(0, 0)[t]),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(name.to_string())
}

/// Windowed RIRs over the window span (CSV) and the windowed spectrum over
/// the analysis band (CSV and binary).
pub fn write_windowed_rirs(dir: &Path, prepared: &PreparedSpectrum, cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let ir = inverse_dft(&prepared.windowed)?;
    let window = cfg.window();
    let start = window.start_sample(cfg.signal.fs);
    write_impulse_csv(
        &ir,
        start..start + window.length_samples,
        create(&dir.join("rir_windowed.csv"))?,
    )?;
    let band = prepared
        .windowed
        .select_band(cfg.analysis.band_hz[0], cfg.analysis.band_hz[1]);
    write_spectrum_csv(&band, create(&dir.join("spectrum_band.csv"))?)?;
    write_spectrum_binary(&band, create(&dir.join("spectrum_band.bin"))?)?;
    Ok(vec![
        "rir_windowed.csv".to_string(),
        "spectrum_band.csv".to_string(),
        "spectrum_band.bin".to_string(),
    ])
}

/// `cross_spectrum.csv`, `cross_spectrum.json` and `eigenvalues.csv`.
pub fn write_cross_spectrum(dir: &Path, analysis: &Analysis) -> Result<Vec<String>> {
    analysis.cross.write_csv(create(&dir.join("cross_spectrum.csv"))?)?;
    analysis
        .cross
        .write_json_meta(create(&dir.join("cross_spectrum.json"))?)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("eigenvalues.csv"))?);
    w.write_record(["index", "value", "value_db"]).map_err(csv_err)?;
    for (i, (v, db)) in analysis.eig.values.iter().zip(analysis.eig.values_db()).enumerate() {
        w.write_record(&[(i + 1).to_string(), format!("{v:e}"), format!("{db:.6}")])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(vec![
        "cross_spectrum.csv".to_string(),
        "cross_spectrum.json".to_string(),
        "eigenvalues.csv".to_string(),
    ])
}

pub fn write_music_spectrum(dir: &Path, spectrum: &MusicSpectrum) -> Result<String> {
    let name = "music_spectrum.csv";
    spectrum.write_csv(create(&dir.join(name))?)?;
    Ok(name.to_string())
}

#[derive(Serialize)]
struct TruthEntry {
    index: usize,
    theta_deg: f64,
    phi_deg: f64,
    delay_s: f64,
    error_deg: Option<f64>,
}

#[derive(Serialize)]
struct DoaFile<'a> {
    estimates: &'a [crate::music::DoaReportEntry],
    truth: Vec<TruthEntry>,
    peak_deficit: bool,
    tolerance_deg: f64,
}

/// `doa.json`: estimates with matched errors plus the ground truth.
pub fn write_doa(dir: &Path, summary: &ExperimentSummary, truth: &[Reflection]) -> Result<String> {
    let name = "doa.json";
    let file = DoaFile {
        estimates: &summary.doas,
        truth: truth
            .iter()
            .zip(&summary.truth_errors_deg)
            .enumerate()
            .map(|(i, (r, e))| TruthEntry {
                index: i,
                theta_deg: r.doa.theta_deg(),
                phi_deg: r.doa.phi_deg(),
                delay_s: r.delay_s,
                error_deg: *e,
            })
            .collect(),
        peak_deficit: summary.peak_deficit,
        tolerance_deg: summary.tolerance_deg,
    };
    write_json(&dir.join(name), &file)?;
    Ok(name.to_string())
}
