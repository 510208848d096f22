//! ECG trace model and adaptive-threshold R-peak detection.
//!
//! The detector follows the Christov filter-bank structure: two cascaded
//! moving averages suppress power-line interference and high-frequency
//! muscle noise, an absolute first difference forms a "complex lead" that
//! responds to steep slopes, and a composite adaptive threshold (a decaying
//! steep-slope term, a slowly adapting shape term, and an expected-beat
//! term) gates candidate beats, with a refractory period. Every threshold
//! component is built from the complex lead itself, so detection is
//! invariant to rescaling the input voltage.

use crate::error::{Error, Result};

/// Uniformly sampled single-lead ECG voltage in millivolts.
///
/// `start_time` places the first sample on the clock shared with the
/// thermal sequence timestamps; alignment of the two recordings is an
/// input contract, not something this crate estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgTrace {
    sample_rate: f64,
    samples: Vec<f64>,
    start_time: f64,
}

impl EcgTrace {
    pub fn new(sample_rate: f64, samples: Vec<f64>, start_time: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidSampleRate { rate: sample_rate });
        }
        if samples.len() < 2 {
            return Err(Error::TooFewSamples { got: samples.len() });
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self { sample_rate, samples, start_time })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    /// Clock time of sample `index`.
    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Strictly increasing R-peak times on the shared clock.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RPeakSeries {
    peak_times: Vec<f64>,
}

/// Normal RR intervals run roughly 0.6 to 1.2 s; anything outside this
/// generalized band is flagged as implausible rather than rejected.
pub const PLAUSIBLE_RR: (f64, f64) = (0.3, 2.0);

impl RPeakSeries {
    pub fn new(peak_times: Vec<f64>) -> Result<Self> {
        if let Some(index) = peak_times.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonIncreasingPeaks { index });
        }
        for (i, pair) in peak_times.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(Error::NonIncreasingPeaks { index: i + 1 });
            }
        }
        Ok(Self { peak_times })
    }

    pub fn peak_times(&self) -> &[f64] {
        &self.peak_times
    }

    pub fn len(&self) -> usize {
        self.peak_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_times.is_empty()
    }

    /// Indices `i` whose interval `peak_times[i+1] - peak_times[i]` lies
    /// outside [`PLAUSIBLE_RR`]. Non-empty output is a warning, never an
    /// error.
    pub fn implausible_intervals(&self) -> Vec<usize> {
        self.peak_times
            .windows(2)
            .enumerate()
            .filter(|(_, w)| {
                let rr = w[1] - w[0];
                rr < PLAUSIBLE_RR.0 || rr > PLAUSIBLE_RR.1
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn all_rr_plausible(&self) -> bool {
        self.implausible_intervals().is_empty()
    }
}

/// Tuning for [`detect_rpeaks`]. The defaults mirror the Christov
/// constants; acceptance is judged against ground truth, not against the
/// published constants themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Width of the power-line suppression moving average, seconds.
    pub powerline_ma_window: f64,
    /// Width of the EMG suppression moving average, seconds.
    pub emg_ma_window: f64,
    /// Dead time after a detection, seconds.
    pub refractory: f64,
    /// Fraction of the steep-slope threshold shed per second once the
    /// refractory interval has passed.
    pub steep_slope_decay: f64,
    /// Lower RR plausibility bound, seconds.
    pub min_rr_for_plausibility: f64,
    /// Upper RR plausibility bound, seconds.
    pub max_rr: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            powerline_ma_window: 0.02,
            emg_ma_window: 0.028,
            refractory: 0.2,
            steep_slope_decay: 0.4,
            min_rr_for_plausibility: PLAUSIBLE_RR.0,
            max_rr: PLAUSIBLE_RR.1,
        }
    }
}

impl DetectorConfig {
    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.powerline_ma_window > 0.0) {
            problems.push("powerline_ma_window must be positive");
        }
        if !(self.emg_ma_window > 0.0) {
            problems.push("emg_ma_window must be positive");
        }
        if !(self.refractory > 0.0) {
            problems.push("refractory must be positive");
        }
        if !(0.0..1.0).contains(&self.steep_slope_decay) {
            problems.push("steep_slope_decay must lie in [0, 1)");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDetectorConfig { reason: problems.join("; ") })
        }
    }
}

/// Minimum sample rate for 10 ms peak-timing accuracy.
const MIN_SAMPLE_RATE: f64 = 100.0;
/// Warm-up span used to seed the steep-slope threshold.
const WARMUP_SECONDS: f64 = 2.0;
/// Smoothing width applied to the rectified derivative, seconds.
const COMPLEX_LEAD_MA_WINDOW: f64 = 0.04;
/// Half-width of the raw-signal search window around a threshold
/// crossing; the R-peak is defined on the raw lead.
const PEAK_REFINE_HALF_WINDOW: f64 = 0.04;
/// Steep-slope threshold decays for this long after the refractory ends.
const DECAY_SPAN_SECONDS: f64 = 1.0;
/// Gain of the slowly adapting shape term.
const SHAPE_GAIN: f64 = 1.0 / 150.0;
/// Depth of the expected-beat threshold drop, as a fraction of the
/// steep-slope term.
const OVERDUE_DROP: f64 = 0.3;
/// Relative floor that keeps the composite threshold from collapsing.
const THRESHOLD_FLOOR: f64 = 0.05;
/// New steep-slope candidates may not exceed this multiple of the current
/// threshold, which keeps single artifacts from blinding the detector.
const CANDIDATE_CAP: f64 = 1.5;

/// Detect R-peaks with the adaptive composite threshold.
///
/// Peak times are refined to the raw-signal maximum within +/-40 ms of
/// the threshold crossing and reported on the shared clock. No two
/// returned peaks are closer than `cfg.refractory`.
pub fn detect_rpeaks(ecg: &EcgTrace, cfg: &DetectorConfig) -> Result<RPeakSeries> {
    cfg.validate()?;
    let fs = ecg.sample_rate();
    if fs < MIN_SAMPLE_RATE {
        return Err(Error::SampleRateTooLow { rate: fs, min: MIN_SAMPLE_RATE });
    }
    if ecg.duration() < WARMUP_SECONDS {
        return Err(Error::TraceTooShort { duration: ecg.duration(), min: WARMUP_SECONDS });
    }

    let complex_lead = build_complex_lead(ecg.samples(), fs, cfg);
    let crossings = scan_adaptive_threshold(&complex_lead, fs, cfg);
    let peaks = refine_and_space(ecg, &crossings, cfg.refractory);
    RPeakSeries::new(peaks)
}

/// Moving-average cascade and rectified derivative: the detection signal.
fn build_complex_lead(x: &[f64], fs: f64, cfg: &DetectorConfig) -> Vec<f64> {
    let stage1 = centered_moving_average(x, half_window(cfg.powerline_ma_window, fs));
    let stage2 = centered_moving_average(&stage1, half_window(cfg.emg_ma_window, fs));
    let mut rectified = vec![0.0; stage2.len()];
    for i in 1..stage2.len() {
        rectified[i] = (stage2[i] - stage2[i - 1]).abs();
    }
    centered_moving_average(&rectified, half_window(COMPLEX_LEAD_MA_WINDOW, fs))
}

fn half_window(seconds: f64, fs: f64) -> usize {
    ((seconds * fs / 2.0).round() as usize).max(1)
}

/// Zero-delay moving average; the window shrinks symmetrically at the
/// edges.
fn centered_moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Forward scan of the composite adaptive threshold. Returns the sample
/// indices where the complex lead crossed the threshold.
fn scan_adaptive_threshold(y: &[f64], fs: f64, cfg: &DetectorConfig) -> Vec<usize> {
    let n = y.len();
    let refractory = (cfg.refractory * fs).round() as usize;
    let warmup = ((WARMUP_SECONDS * fs) as usize).min(n);
    let i50 = ((0.05 * fs).round() as usize).max(1);
    let i300 = (0.30 * fs).round() as usize;
    let i350 = (0.35 * fs).round() as usize;

    let seed = 0.6 * y[..warmup].iter().cloned().fold(0.0_f64, f64::max);
    let mut steep_buffer = std::collections::VecDeque::from(vec![seed; 5]);
    let mut steep = seed;
    let mut shape = 0.0_f64;
    let mut rr_buffer: std::collections::VecDeque<f64> = std::collections::VecDeque::new();

    let mut crossings = Vec::new();
    // A virtual beat at t = 0 starts the decay schedule.
    let mut last_crossing: usize = 0;
    let mut has_beat = false;

    for i in 0..n {
        if i >= i350 {
            let recent = window_max(y, i + 1 - i50, i + 1);
            let past = window_max(y, i - i350, i - i300);
            shape += SHAPE_GAIN * (recent - past);
        }

        let since = (i - last_crossing) as f64 / fs;
        if has_beat && since < cfg.refractory {
            continue;
        }

        let decay_progress = ((since - cfg.refractory) / DECAY_SPAN_SECONDS).clamp(0.0, 1.0);
        let steep_now = steep * (1.0 - cfg.steep_slope_decay * decay_progress);

        let mut overdue = 0.0;
        if !rr_buffer.is_empty() {
            let rm = rr_buffer.iter().sum::<f64>() / rr_buffer.len() as f64;
            let onset = 2.0 / 3.0 * rm;
            if since > onset {
                overdue = -OVERDUE_DROP * steep * ((since - onset) / onset).min(1.0);
            }
        }

        let threshold = (steep_now + shape + overdue).max(THRESHOLD_FLOOR * steep);
        if y[i] > threshold {
            // Candidate for the steep-slope update: the complex-lead crest
            // inside the refractory window behind this crossing.
            let crest = window_max(y, i, (i + refractory).min(n));
            let candidate = (0.6 * crest).min(CANDIDATE_CAP * steep).max(f64::MIN_POSITIVE);
            steep_buffer.pop_front();
            steep_buffer.push_back(candidate);
            steep = steep_buffer.iter().sum::<f64>() / steep_buffer.len() as f64;

            if has_beat {
                rr_buffer.push_back((i - last_crossing) as f64 / fs);
                if rr_buffer.len() > 5 {
                    rr_buffer.pop_front();
                }
            }
            crossings.push(i);
            last_crossing = i;
            has_beat = true;
        }
    }
    crossings
}

fn window_max(y: &[f64], lo: usize, hi: usize) -> f64 {
    y[lo..hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Move each crossing to the raw-lead maximum nearby, then enforce the
/// refractory spacing on the refined times.
fn refine_and_space(ecg: &EcgTrace, crossings: &[usize], refractory: f64) -> Vec<f64> {
    let x = ecg.samples();
    let half = (PEAK_REFINE_HALF_WINDOW * ecg.sample_rate()).round() as usize;
    let mut times: Vec<f64> = Vec::with_capacity(crossings.len());
    for &i in crossings {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(x.len());
        let mut best = lo;
        for j in lo..hi {
            if x[j] > x[best] {
                best = j;
            }
        }
        let t = ecg.time_of(best);
        match times.last() {
            Some(&prev) if t - prev < refractory => {}
            Some(&prev) if t <= prev => {}
            _ => times.push(t),
        }
    }
    times
}

/// Consecutive differences of the peak times; all positive by the
/// [`RPeakSeries`] invariant.
pub fn rr_intervals(peaks: &RPeakSeries) -> Result<Vec<f64>> {
    if peaks.len() < 2 {
        return Err(Error::InsufficientPeaks { found: peaks.len(), needed: 2 });
    }
    Ok(peaks.peak_times().windows(2).map(|w| w[1] - w[0]).collect())
}

/// Mean RR interval, evaluated as the telescoped form
/// `(last - first) / (count - 1)`.
pub fn mean_rr(peaks: &RPeakSeries) -> Result<f64> {
    if peaks.len() < 2 {
        return Err(Error::InsufficientPeaks { found: peaks.len(), needed: 2 });
    }
    let times = peaks.peak_times();
    Ok((times[times.len() - 1] - times[0]) / (times.len() - 1) as f64)
}
