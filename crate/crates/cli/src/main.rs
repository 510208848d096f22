//! Command-line pipeline for heartbeat-referenced lock-in thermography.
//!
//! Exit codes: 0 success, 1 usage error, 2 input-format error,
//! 3 precondition failure. Every failure prints a one-line diagnostic on
//! stderr. Outputs are deterministic: identical inputs and flags produce
//! byte-identical files.

mod cfgfile;
mod commands;
mod pgm;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thermolock::{ErrorCategory, Pixel};

#[derive(Parser)]
#[command(
    name = "thermolock",
    version,
    about = "Heartbeat-referenced lock-in thermography pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: THS1 video, ECG CSV, ground-truth JSON
    Synth(SynthArgs),
    /// Detect R-peaks from an ECG CSV
    Rpeaks(RpeaksArgs),
    /// Score inter-frame motion and select the low-motion segment
    Motion(MotionArgs),
    /// Sliding lock-in profile for one pixel, or a whole-frame map
    Lockin(LockinArgs),
    /// Sliding lock-in profile for one pixel (3x3 pooled)
    Profile(ProfileArgs),
    /// Per-pixel spectral amplitude/phase maps at the cardiac frequency
    Arterymap(ArterymapArgs),
    /// SVG report: raw trace vs locked profile with error bars
    Report(ReportArgs),
}

fn parse_pixel(s: &str) -> Result<Pixel, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected ROW,COL, got {s:?}"));
    }
    let row = parts[0].trim().parse().map_err(|e| format!("row: {e}"))?;
    let col = parts[1].trim().parse().map_err(|e| format!("col: {e}"))?;
    Ok(Pixel::new(row, col))
}

/// `auto` or a period in seconds.
#[derive(Debug, Clone, Copy)]
enum TRrArg {
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for TRrArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TRrArg::Auto);
        }
        let v: f64 = s.parse().map_err(|e| format!("t-rr: {e}"))?;
        if v > 0.0 {
            Ok(TRrArg::Fixed(v))
        } else {
            Err("t-rr must be positive".to_string())
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ErrorBars {
    Se,
    Sd,
}

impl std::str::FromStr for ErrorBars {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "se" => Ok(ErrorBars::Se),
            "sd" => Ok(ErrorBars::Sd),
            other => Err(format!("error bars must be se or sd, got {other:?}")),
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for thermal.ths1, ecg.csv, ground_truth.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Recording length in seconds
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    heart_rate: Option<f64>,
    #[arg(long)]
    ecg_rate: Option<f64>,
    #[arg(long)]
    frame_rate: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Fractional RR jitter
    #[arg(long)]
    jitter: Option<f64>,
    /// Oscillation amplitude in kelvin
    #[arg(long)]
    amplitude: Option<f64>,
    /// Noise standard deviation in kelvin
    #[arg(long)]
    noise_sd: Option<f64>,
    /// sinusoid or triangular
    #[arg(long)]
    waveform: Option<thermolock::Waveform>,
    #[arg(long)]
    baseline: Option<f64>,
    /// Kelvin per second
    #[arg(long)]
    drift: Option<f64>,
    /// Oscillation phase at the R-peak, radians
    #[arg(long)]
    artery_phase: Option<f64>,
    /// Artery mask block as ROW0,COL0,ROWS,COLS; default is a centered 8x8
    #[arg(long)]
    mask: Option<String>,
    /// key=value file with the same keys as the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RpeaksArgs {
    #[arg(long)]
    ecg: PathBuf,
    #[arg(long, default_value = "rpeaks.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct MotionArgs {
    #[arg(long)]
    thermal: PathBuf,
    /// Output directory for motion.csv and segment.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Segment length to select, seconds
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
}

#[derive(Args)]
struct LockinArgs {
    #[arg(long)]
    ecg: PathBuf,
    #[arg(long)]
    thermal: PathBuf,
    /// Pixel ROW,COL for a sliding profile; omit for the whole-frame map
    #[arg(long, value_parser = parse_pixel)]
    pixel: Option<Pixel>,
    #[arg(long, default_value = "lockin.csv")]
    out: PathBuf,
    /// Lock-in window length, seconds
    #[arg(long)]
    window: Option<f64>,
    /// Window slide, seconds
    #[arg(long)]
    slide: Option<f64>,
    /// Common cycle period: auto (mean RR) or seconds
    #[arg(long, value_name = "AUTO|SECONDS")]
    t_rr: Option<TRrArg>,
    /// Phase bin count; default ties bins to the frame interval
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    min_cycles: Option<usize>,
    /// Window start for map mode, seconds (default: recording start)
    #[arg(long)]
    window_start: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    ecg: PathBuf,
    #[arg(long)]
    thermal: PathBuf,
    /// Pixel ROW,COL (3x3 pooled)
    #[arg(long, value_parser = parse_pixel)]
    pixel: Pixel,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    slide: Option<f64>,
    #[arg(long, value_name = "AUTO|SECONDS")]
    t_rr: Option<TRrArg>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    min_cycles: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ArterymapArgs {
    #[arg(long)]
    ecg: PathBuf,
    #[arg(long)]
    thermal: PathBuf,
    /// Output directory for the PGM maps, sidecar JSON, and CSV
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_name = "AUTO|SECONDS")]
    t_rr: Option<TRrArg>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    ecg: PathBuf,
    #[arg(long)]
    thermal: PathBuf,
    #[arg(long, value_parser = parse_pixel)]
    pixel: Pixel,
    #[arg(long, default_value = "report.svg")]
    out: PathBuf,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    slide: Option<f64>,
    #[arg(long, value_name = "AUTO|SECONDS")]
    t_rr: Option<TRrArg>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    min_cycles: Option<usize>,
    /// se (standard error, default) or sd (standard deviation)
    #[arg(long, default_value = "se")]
    error_bars: ErrorBars,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("usage error: {e}");
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::Synth(args) => commands::run_synth(args),
        Command::Rpeaks(args) => commands::run_rpeaks(args),
        Command::Motion(args) => commands::run_motion(args),
        Command::Lockin(args) => commands::run_lockin(args),
        Command::Profile(args) => commands::run_profile(args),
        Command::Arterymap(args) => commands::run_arterymap(args),
        Command::Report(args) => commands::run_report(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CommandError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CommandError::Pipeline(e)) => {
            eprintln!("error: {e}");
            match e.category() {
                ErrorCategory::InputFormat => ExitCode::from(2),
                ErrorCategory::Precondition => ExitCode::from(3),
            }
        }
    }
}

/// Failures past argument parsing: either still a usage problem (bad
/// config keys, malformed mask) or a pipeline error with its category.
pub enum CommandError {
    Usage(String),
    Pipeline(thermolock::Error),
}

impl From<thermolock::Error> for CommandError {
    fn from(e: thermolock::Error) -> Self {
        CommandError::Pipeline(e)
    }
}
