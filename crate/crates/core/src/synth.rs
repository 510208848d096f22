//! Synthetic ECG + thermal generators with exact ground truth.
//!
//! Every pipeline stage is verified against data whose cardiac timing,
//! oscillation amplitude, phase, and noise are known by construction: a
//! jittered RR sequence renders a PQRST-like template into the ECG, and
//! the thermal frames decompose literally into signal plus noise, with the
//! signal locked to the same R-peak times through the piecewise-linear
//! phase convention used by the analysis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecg::EcgTrace;
use crate::error::{Error, Result};
use crate::thermal::{Pixel, ThermalSequence};
use crate::warp::{build_warp, TRr};

/// Shape of the cardiac temperature oscillation. Both are unit amplitude
/// with their crest at phase zero, i.e. at the R-peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    /// `cos(theta)`; the default, with a closed-form projection oracle.
    Sinusoid,
    /// Unit triangle wave, crest at 0 and trough at half a cycle. Arterial
    /// pulse waves look closer to this shape than to a sinusoid.
    Triangular,
}

impl Waveform {
    /// Evaluate at cycle angle `theta` (radians).
    pub fn eval(self, theta: f64) -> f64 {
        match self {
            Waveform::Sinusoid => theta.cos(),
            Waveform::Triangular => {
                let tau = std::f64::consts::TAU;
                let y = theta.rem_euclid(tau);
                let dist = y.min(tau - y);
                1.0 - 2.0 * dist / std::f64::consts::PI
            }
        }
    }
}

impl std::str::FromStr for Waveform {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sinusoid" | "sin" => Ok(Waveform::Sinusoid),
            "triangular" | "tri" => Ok(Waveform::Triangular),
            other => Err(format!("unknown waveform {other:?}; use sinusoid or triangular")),
        }
    }
}

impl std::fmt::Display for Waveform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Waveform::Sinusoid => write!(f, "sinusoid"),
            Waveform::Triangular => write!(f, "triangular"),
        }
    }
}

/// Scene and recording parameters for the paired generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Recording length, seconds.
    pub duration: f64,
    /// ECG sample rate, Hz.
    pub ecg_rate: f64,
    /// Thermal frame rate, Hz.
    pub frame_rate: f64,
    pub width: usize,
    pub height: usize,
    /// Mean heart rate, beats per minute.
    pub heart_rate: f64,
    /// Fractional standard deviation of the RR interval.
    pub rr_jitter: f64,
    /// Peak temperature oscillation, kelvin.
    pub signal_amplitude: f64,
    /// Per-pixel per-frame noise standard deviation, kelvin.
    pub noise_sd: f64,
    pub waveform: Waveform,
    /// Pixels carrying the cardiac oscillation; must lie in the interior
    /// (a full 3x3 neighborhood around each).
    pub artery_mask: Vec<Pixel>,
    /// Oscillation phase at the R-peak, radians.
    pub artery_phase: f64,
    /// Resting skin temperature, kelvin.
    pub baseline: f64,
    /// Linear temperature drift, kelvin per second.
    pub drift: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration: 30.0,
            ecg_rate: 500.0,
            frame_rate: 30.0,
            width: 64,
            height: 64,
            heart_rate: 72.0,
            rr_jitter: 0.05,
            signal_amplitude: 0.010,
            noise_sd: 0.030,
            waveform: Waveform::Sinusoid,
            artery_mask: block_mask(28, 28, 8, 8),
            artery_phase: 0.0,
            baseline: 307.0,
            drift: 0.0,
            seed: 0,
        }
    }
}

/// Rectangular pixel block starting at (row0, col0), a convenient artery
/// mask shape.
pub fn block_mask(row0: usize, col0: usize, rows: usize, cols: usize) -> Vec<Pixel> {
    let mut mask = Vec::with_capacity(rows * cols);
    for r in row0..row0 + rows {
        for c in col0..col0 + cols {
            mask.push(Pixel::new(r, c));
        }
    }
    mask
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.duration > 0.0) {
            problems.push("duration must be positive".to_string());
        }
        if !(self.ecg_rate > 0.0) {
            problems.push("ecg_rate must be positive".to_string());
        }
        if !(self.frame_rate > 0.0) {
            problems.push("frame_rate must be positive".to_string());
        }
        if self.width < 3 || self.height < 3 {
            problems.push(format!("frame geometry {}x{} below 3x3", self.width, self.height));
        }
        if !(self.heart_rate > 0.0) {
            problems.push("heart_rate must be positive".to_string());
        }
        if !(0.0..0.3).contains(&self.rr_jitter) {
            problems.push(format!("rr_jitter {} outside [0, 0.3)", self.rr_jitter));
        }
        if !(self.signal_amplitude >= 0.0) {
            problems.push("signal_amplitude must be non-negative".to_string());
        }
        if !(self.noise_sd >= 0.0) {
            problems.push("noise_sd must be non-negative".to_string());
        }
        if !self.baseline.is_finite() || !self.drift.is_finite() || !self.artery_phase.is_finite() {
            problems.push("baseline, drift, and artery_phase must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSynthConfig { problems })
        }
    }

    fn check_mask_interior(&self) -> Result<()> {
        for p in &self.artery_mask {
            let interior =
                p.row >= 1 && p.row + 1 < self.height && p.col >= 1 && p.col + 1 < self.width;
            if !interior {
                return Err(Error::MaskOutsideInterior {
                    row: p.row,
                    col: p.col,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }
}

/// What the generators promised to emit; the oracle for every later stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Scheduled R-peak times, seconds on the shared clock.
    pub true_rpeak_times: Vec<f64>,
    /// Realized RR intervals, one per consecutive peak pair.
    pub true_rr: Vec<f64>,
    pub artery_mask: Vec<Pixel>,
    pub signal_amplitude: f64,
    pub artery_phase: f64,
    pub waveform: Waveform,
}

// PQRST template as Gaussian bumps: (center s, sigma s, amplitude mV).
// Q and S mirror each other so their slopes cancel at the R crest and the
// template maximum sits exactly on the scheduled peak time.
const TEMPLATE: [(f64, f64, f64); 5] = [
    (-0.20, 0.025, 0.12),   // P
    (-0.035, 0.010, -0.10), // Q
    (0.0, 0.011, 1.0),      // R
    (0.035, 0.010, -0.10),  // S
    (0.28, 0.045, 0.30),    // T
];
/// Beats farther than this from a sample contribute nothing.
const TEMPLATE_SUPPORT: f64 = 0.6;

fn template_value(dt: f64) -> f64 {
    TEMPLATE
        .iter()
        .map(|&(center, sigma, amp)| amp * (-0.5 * ((dt - center) / sigma).powi(2)).exp())
        .sum()
}

fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    // SplitMix64 over (seed, stream) decorrelates the per-purpose streams.
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

const STREAM_ECG: u64 = 1;
const STREAM_FRAME_BASE: u64 = 0x1000;

/// Clean synthetic ECG: jittered RR schedule rendered through the PQRST
/// template. The template maximum of every beat is the scheduled R-peak,
/// so the emitted ground truth is exact.
pub fn synth_ecg(cfg: &SynthConfig) -> Result<(EcgTrace, GroundTruth)> {
    cfg.validate()?;
    let mean_rr = 60.0 / cfg.heart_rate;
    let jitter_sd = cfg.rr_jitter * mean_rr;
    let normal = Normal::new(mean_rr, jitter_sd)
        .map_err(|e| Error::InvalidSynthConfig { problems: vec![format!("rr draw: {e}")] })?;
    let mut rng = derive_rng(cfg.seed, STREAM_ECG);
    let mut draw = move || -> f64 { rng.sample(normal).clamp(0.3, 2.0) };

    let mut peaks = Vec::new();
    let mut t = 0.5 * draw();
    while t < cfg.duration {
        peaks.push(t);
        t += draw();
    }

    let n = (cfg.duration * cfg.ecg_rate).round() as usize;
    let mut samples = vec![0.0_f64; n];
    for &peak in &peaks {
        let lo = (((peak - TEMPLATE_SUPPORT) * cfg.ecg_rate).ceil() as i64).max(0) as usize;
        let hi = ((((peak + TEMPLATE_SUPPORT) * cfg.ecg_rate).floor() as i64) + 1)
            .clamp(0, n as i64) as usize;
        for (k, sample) in samples.iter_mut().enumerate().take(hi).skip(lo) {
            *sample += template_value(k as f64 / cfg.ecg_rate - peak);
        }
    }

    let true_rr = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    let truth = GroundTruth {
        true_rpeak_times: peaks,
        true_rr,
        artery_mask: cfg.artery_mask.clone(),
        signal_amplitude: cfg.signal_amplitude,
        artery_phase: cfg.artery_phase,
        waveform: cfg.waveform,
    };
    Ok((EcgTrace::new(cfg.ecg_rate, samples, 0.0)?, truth))
}

/// Thermal frames decomposed into their cardiac signal and noise parts.
///
/// The combined sequence from [`synth_thermal`] is the per-pixel `f32` sum
/// `signal + noise`, so tests can check the decomposition bit for bit.
pub fn synth_thermal_parts(
    cfg: &SynthConfig,
    truth: &GroundTruth,
) -> Result<(ThermalSequence<f32>, ThermalSequence<f32>)> {
    cfg.validate()?;
    cfg.check_mask_interior()?;

    let warp = if truth.true_rpeak_times.len() >= 2 {
        let peaks = crate::ecg::RPeakSeries::new(truth.true_rpeak_times.clone())?;
        Some(build_warp(&peaks, TRr::Auto)?)
    } else {
        None
    };

    let frame_count = (cfg.duration * cfg.frame_rate).round() as usize;
    if frame_count == 0 {
        return Err(Error::InvalidSynthConfig {
            problems: vec!["duration shorter than one frame".to_string()],
        });
    }
    let timestamps: Vec<f64> = (0..frame_count).map(|k| k as f64 / cfg.frame_rate).collect();
    let per_frame = cfg.width * cfg.height;

    let in_mask = {
        let mut mask = vec![false; per_frame];
        for p in &truth.artery_mask {
            mask[p.row * cfg.width + p.col] = true;
        }
        mask
    };

    let frames: Vec<(Vec<f32>, Vec<f32>)> = (0..frame_count)
        .into_par_iter()
        .map(|f| {
            let t = f as f64 / cfg.frame_rate;
            let base = cfg.baseline + cfg.drift * t;
            let oscillation = match &warp {
                Some(w) if cfg.signal_amplitude > 0.0 => {
                    let theta = std::f64::consts::TAU * w.warp_time_extended(t) / w.t_rr();
                    cfg.signal_amplitude * truth.waveform.eval(theta + cfg.artery_phase)
                }
                _ => 0.0,
            };
            let mut signal = Vec::with_capacity(per_frame);
            for masked in &in_mask {
                let v = if *masked { base + oscillation } else { base };
                signal.push(v as f32);
            }
            let noise = if cfg.noise_sd > 0.0 {
                let mut rng = derive_rng(cfg.seed, STREAM_FRAME_BASE + f as u64);
                let normal = Normal::new(0.0, cfg.noise_sd).expect("validated noise_sd");
                (0..per_frame).map(|_| rng.sample(normal) as f32).collect()
            } else {
                vec![0.0_f32; per_frame]
            };
            (signal, noise)
        })
        .collect();

    let mut signal_data = Vec::with_capacity(frame_count * per_frame);
    let mut noise_data = Vec::with_capacity(frame_count * per_frame);
    for (s, n) in frames {
        signal_data.extend_from_slice(&s);
        noise_data.extend_from_slice(&n);
    }
    Ok((
        ThermalSequence::new(cfg.width, cfg.height, timestamps.clone(), signal_data)?,
        ThermalSequence::new(cfg.width, cfg.height, timestamps, noise_data)?,
    ))
}

/// Thermal sequence paired with the ground truth from [`synth_ecg`]:
/// baseline + drift + masked cardiac oscillation + Gaussian noise, cast to
/// the `f32` storage scalar. Noise is drawn per frame from a counter-based
/// stream, so frame generation order does not affect the output.
pub fn synth_thermal(cfg: &SynthConfig, truth: &GroundTruth) -> Result<ThermalSequence<f32>> {
    let (signal, noise) = synth_thermal_parts(cfg, truth)?;
    let data: Vec<f32> = signal.data().iter().zip(noise.data()).map(|(s, n)| s + n).collect();
    ThermalSequence::new(cfg.width, cfg.height, signal.timestamps().to_vec(), data)
}

/// Paired ECG + thermal bundle on one clock and seed, ready for the file
/// writers.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<(EcgTrace, ThermalSequence<f32>, GroundTruth)> {
    let (ecg, truth) = synth_ecg(cfg)?;
    let thermal = synth_thermal(cfg, &truth)?;
    Ok((ecg, thermal, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_jitter_peaks_land_on_half_period_grid() {
        let cfg = SynthConfig {
            duration: 10.0,
            heart_rate: 60.0,
            rr_jitter: 0.0,
            ..SynthConfig::default()
        };
        let (_, truth) = synth_ecg(&cfg).unwrap();
        let expected: Vec<f64> = (0..10).map(|k| 0.5 + k as f64).collect();
        assert_eq!(truth.true_rpeak_times, expected);
        assert_eq!(truth.true_rr, vec![1.0; 9]);
    }

    #[test]
    fn template_max_is_the_scheduled_peak() {
        // Fine scan around the crest; Q/S symmetry keeps it at dt = 0.
        let crest = template_value(0.0);
        for k in 1..=40 {
            let dt = k as f64 * 5e-4;
            assert!(template_value(dt) < crest, "crest not maximal at +{dt}");
            assert!(template_value(-dt) < crest, "crest not maximal at -{dt}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let cfg = SynthConfig {
            duration: 4.0,
            width: 8,
            height: 8,
            seed: 42,
            artery_mask: block_mask(2, 2, 3, 3),
            ..SynthConfig::default()
        };
        let (ecg_a, thermal_a, truth_a) = synth_dataset(&cfg).unwrap();
        let (ecg_b, thermal_b, truth_b) = synth_dataset(&cfg).unwrap();
        assert_eq!(ecg_a, ecg_b);
        assert_eq!(truth_a, truth_b);
        assert_eq!(thermal_a, thermal_b);
    }

    #[test]
    fn rr_jitter_is_reflected_in_interval_statistics() {
        let cfg = SynthConfig {
            duration: 60.0,
            heart_rate: 75.0,
            rr_jitter: 0.10,
            seed: 7,
            ..SynthConfig::default()
        };
        let (_, truth) = synth_ecg(&cfg).unwrap();
        assert!(truth.true_rr.len() > 50);
        let mean = truth.true_rr.iter().sum::<f64>() / truth.true_rr.len() as f64;
        let var = truth.true_rr.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
            / truth.true_rr.len() as f64;
        let cv = var.sqrt() / mean;
        assert!((0.05..=0.15).contains(&cv), "cv = {cv}");
        assert_relative_eq!(mean, 0.8, max_relative = 0.05);
    }

    #[test]
    fn noise_free_series_is_the_exact_waveform() {
        let cfg = SynthConfig {
            duration: 6.0,
            width: 8,
            height: 8,
            rr_jitter: 0.0,
            heart_rate: 60.0,
            noise_sd: 0.0,
            artery_mask: block_mask(2, 2, 3, 3),
            seed: 3,
            ..SynthConfig::default()
        };
        let (_, truth) = synth_ecg(&cfg).unwrap();
        let thermal = synth_thermal(&cfg, &truth).unwrap();
        let peaks = crate::ecg::RPeakSeries::new(truth.true_rpeak_times.clone()).unwrap();
        let warp = build_warp(&peaks, TRr::Auto).unwrap();
        for (k, &t) in thermal.timestamps().iter().enumerate() {
            let theta = std::f64::consts::TAU * warp.warp_time_extended(t) / warp.t_rr();
            let expected = (cfg.baseline + cfg.signal_amplitude * cfg.waveform.eval(theta)) as f32;
            assert_eq!(thermal.value(k, 3, 3), expected);
            assert_eq!(thermal.value(k, 6, 6), cfg.baseline as f32);
        }
    }

    #[test]
    fn combined_is_bitwise_signal_plus_noise() {
        let cfg = SynthConfig {
            duration: 2.0,
            width: 8,
            height: 8,
            artery_mask: block_mask(2, 2, 3, 3),
            seed: 9,
            ..SynthConfig::default()
        };
        let (_, truth) = synth_ecg(&cfg).unwrap();
        let combined = synth_thermal(&cfg, &truth).unwrap();
        let (signal, noise) = synth_thermal_parts(&cfg, &truth).unwrap();
        for ((c, s), n) in combined.data().iter().zip(signal.data()).zip(noise.data()) {
            assert_eq!(*c, s + n);
        }
    }

    #[test]
    fn ecg_and_thermal_durations_agree() {
        let cfg = SynthConfig {
            duration: 12.0,
            width: 8,
            height: 8,
            artery_mask: block_mask(2, 2, 2, 2),
            ..SynthConfig::default()
        };
        let (ecg, thermal, _) = synth_dataset(&cfg).unwrap();
        let frame_interval = 1.0 / cfg.frame_rate;
        assert!((ecg.duration() - thermal.duration()).abs() <= frame_interval + 1e-9);
    }

    #[test]
    fn mask_outside_interior_is_rejected() {
        let cfg = SynthConfig {
            duration: 2.0,
            width: 8,
            height: 8,
            artery_mask: vec![Pixel::new(0, 3)],
            ..SynthConfig::default()
        };
        let (_, truth) = synth_ecg(&cfg).unwrap();
        assert!(matches!(
            synth_thermal(&cfg, &truth),
            Err(Error::MaskOutsideInterior { row: 0, col: 3, .. })
        ));
    }

    #[test]
    fn invalid_config_enumerates_problems() {
        let cfg = SynthConfig {
            duration: -1.0,
            rr_jitter: 0.5,
            heart_rate: 0.0,
            ..SynthConfig::default()
        };
        match synth_ecg(&cfg) {
            Err(Error::InvalidSynthConfig { problems }) => {
                assert_eq!(problems.len(), 3, "{problems:?}");
            }
            other => panic!("expected InvalidSynthConfig, got {other:?}"),
        }
    }

    #[test]
    fn triangular_wave_has_unit_crest_and_trough() {
        assert_relative_eq!(Waveform::Triangular.eval(0.0), 1.0);
        assert_relative_eq!(Waveform::Triangular.eval(std::f64::consts::PI), -1.0);
        assert_relative_eq!(Waveform::Triangular.eval(std::f64::consts::FRAC_PI_2), 0.0);
        assert_relative_eq!(
            Waveform::Triangular.eval(7.0 * std::f64::consts::TAU),
            1.0,
            epsilon = 1e-9
        );
    }
}
