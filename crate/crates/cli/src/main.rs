//! Command-line front end for the modal smoothing experiments.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 numerical conditioning error, 4 results outside tolerance.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modal_smoothing::harness::{
    exit_code, reproduce_paper, run_experiment, simulate, smooth, ExperimentConfig, EXIT_ACCEPTANCE_FAILURE,
};
use modal_smoothing::smoothing::SmoothingMethod;
use modal_smoothing::Result;

#[derive(Parser, Debug)]
#[command(
    name = "modal-smoothing",
    version,
    about = "Modal smoothing experiments for spherical MIMO arrays"
)]
struct Cli {
    /// TOML experiment configuration; the built-in reference configuration when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Smoothing method: modal, frequency or combined.
    #[arg(long, global = true)]
    method: Option<SmoothingMethod>,
    /// MUSIC grid resolution in degrees.
    #[arg(long = "grid-deg", global = true)]
    grid_deg: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write ground truth, RIRs and the windowed spectrum.
    Simulate,
    /// Write the smoothed cross-spectrum and its eigenvalues.
    Smooth,
    /// Run the full pipeline and write the MUSIC spectrum and DOAs.
    Music,
    /// Run the four reference experiments and check their expected outcomes.
    ReproducePaper,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::paper(),
    };
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(method) = cli.method {
        cfg.analysis.method = method;
    }
    if let Some(g) = cli.grid_deg {
        cfg.analysis.grid_deg = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Simulate => {
            print_json(&simulate(&cfg)?)?;
            Ok(0)
        }
        Command::Smooth => {
            print_json(&smooth(&cfg)?)?;
            Ok(0)
        }
        Command::Music => {
            let summary = run_experiment(&cfg)?;
            print_json(&summary)?;
            Ok(if summary.doa_pass { 0 } else { EXIT_ACCEPTANCE_FAILURE })
        }
        Command::ReproducePaper => {
            let report = reproduce_paper(&cfg, &cfg.output.dir)?;
            for e in &report.experiments {
                eprintln!(
                    "{:<14} signals {}  max error {}  {}",
                    e.label,
                    e.estimated_signal_count,
                    e.max_error_deg.map_or("-".to_string(), |v| format!("{v:.2} deg")),
                    if e.doa_pass { "localized" } else { "not localized" },
                );
            }
            for c in &report.checks {
                eprintln!(
                    "[{}] {}: {}",
                    if c.met { "ok" } else { "FAIL" },
                    c.experiment,
                    c.expectation
                );
            }
            print_json(&report)?;
            Ok(if report.all_met { 0 } else { EXIT_ACCEPTANCE_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
