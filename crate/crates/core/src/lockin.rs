//! Phase-binned synchronous averaging with SD/SE over sliding windows.
//!
//! Samples inside a lock-in window are mapped through the time warp,
//! assigned to phase bins of the common cycle `[0, t_rr)`, and averaged.
//! A cardiac-synchronous signal adds coherently across cycles while
//! zero-mean noise shrinks with the bin's sample count; the per-bin
//! standard error quantifies exactly how far it has shrunk.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::thermal::{spatial_average_3x3, Pixel, PixelSeries, ThermalSequence};
use crate::warp::TimeWarp;

/// Tolerance for window-edge comparisons on timestamps.
const EDGE_EPS: f64 = 1e-9;
/// Nudge applied before flooring a phase into a bin, so samples that land
/// on a bin boundary up to rounding go into the bin they were scheduled
/// for.
const BIN_NUDGE: f64 = 1e-9;

/// Lock-in window geometry and binning policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInConfig {
    /// Window length on the recorded timeline, seconds.
    pub window: f64,
    /// Offset between consecutive window starts, seconds.
    pub slide: f64,
    /// Number of phase bins; `None` picks one bin per frame interval,
    /// `round(t_rr * frame_rate)`, so each cycle contributes about one
    /// sample per bin.
    pub phase_bins: Option<usize>,
    /// Minimum complete cycles a window must hold.
    pub min_cycles: usize,
}

impl Default for LockInConfig {
    fn default() -> Self {
        Self { window: 15.0, slide: 1.0, phase_bins: None, min_cycles: 4 }
    }
}

impl LockInConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.window > 0.0) {
            problems.push("window must be positive");
        }
        if !(self.slide > 0.0) {
            problems.push("slide must be positive");
        }
        if let Some(bins) = self.phase_bins {
            if bins < 4 {
                problems.push("phase_bins must be at least 4");
            }
        }
        if self.min_cycles == 0 {
            problems.push("min_cycles must be at least 1");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLockInConfig { reason: problems.join("; ") })
        }
    }

    /// Bin count for a cycle period and frame interval.
    pub fn resolve_bins(&self, t_rr: f64, median_dt: f64) -> usize {
        match self.phase_bins {
            Some(bins) => bins,
            None => {
                if median_dt > 0.0 {
                    ((t_rr / median_dt).round() as usize).max(4)
                } else {
                    4
                }
            }
        }
    }
}

/// Per-bin sample multisets from the complete cycles of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCycles {
    pub window_start: f64,
    pub t_rr: f64,
    pub n_cycles: usize,
    pub pooled_pixels: u32,
    /// `bins[b]` holds every in-window sample whose phase fell in bin `b`.
    pub bins: Vec<Vec<f64>>,
}

impl BinnedCycles {
    pub fn phase_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.t_rr / self.bins.len() as f64
    }

    pub fn total_samples(&self) -> usize {
        self.bins.iter().map(Vec::len).sum()
    }
}

/// Synchronous average of one window: per-bin mean temperature with its
/// spread and the standard error of the mean.
///
/// Bins that received no samples are flagged empty (`sample_count` 0,
/// `NaN` statistics), never zero-filled. For every populated bin,
/// `se[b] == sd[b] / sqrt(sample_count[b] * pooled_pixels)` holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleProfile {
    /// Bin centers in seconds of cycle phase, inside `[0, t_rr)`.
    pub phase_bin_centers: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub se: Vec<f64>,
    /// Contributing frames per bin; the effective sample count for the
    /// standard error is this times `pooled_pixels`.
    pub sample_count: Vec<usize>,
    pub pooled_pixels: u32,
    pub t_rr: f64,
    pub window_start: f64,
    pub n_cycles: usize,
}

impl CycleProfile {
    pub fn is_bin_empty(&self, b: usize) -> bool {
        self.sample_count[b] == 0
    }

    pub fn empty_bins(&self) -> Vec<usize> {
        (0..self.sample_count.len()).filter(|&b| self.sample_count[b] == 0).collect()
    }
}

/// One window of a sliding lock-in run.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub window_start: f64,
    pub profile: CycleProfile,
}

/// A window that was skipped rather than failing the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedWindow {
    pub window_start: f64,
    pub cycles_found: usize,
}

/// Output of [`sliding_lockin`]: the populated windows plus a record of
/// the skipped ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingLockIn {
    pub windows: Vec<WindowResult>,
    pub skipped: Vec<SkippedWindow>,
}

/// Per-pixel lock-in summary over the interior of the source frame
/// (the one-pixel border has no 3x3 neighborhood and is excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct LockInMap {
    interior_width: usize,
    interior_height: usize,
    pub t_rr: f64,
    pub window_start: f64,
    /// Half the peak-to-peak swing of the bin means, kelvin.
    pub amplitude: Vec<f64>,
    /// Phase of the fundamental cycle component relative to the R-peak,
    /// radians in (-pi, pi]; `NaN` where the amplitude is zero or the
    /// pixel is invalid.
    pub phase: Vec<f64>,
    /// Mean standard error across populated bins, kelvin.
    pub se_mean: Vec<f64>,
    /// Pixels whose window preconditions failed are marked invalid.
    pub valid: Vec<bool>,
}

impl LockInMap {
    pub fn interior_width(&self) -> usize {
        self.interior_width
    }

    pub fn interior_height(&self) -> usize {
        self.interior_height
    }

    /// Index into the map vectors for an interior coordinate.
    pub fn index(&self, interior_row: usize, interior_col: usize) -> usize {
        interior_row * self.interior_width + interior_col
    }

    /// Source-frame pixel for a map index.
    pub fn source_pixel(&self, index: usize) -> Pixel {
        Pixel::new(index / self.interior_width + 1, index % self.interior_width + 1)
    }

    /// Map index for a source-frame pixel, if it lies in the interior.
    pub fn index_of_source(&self, pixel: Pixel) -> Option<usize> {
        if pixel.row >= 1
            && pixel.row <= self.interior_height
            && pixel.col >= 1
            && pixel.col <= self.interior_width
        {
            Some((pixel.row - 1) * self.interior_width + (pixel.col - 1))
        } else {
            None
        }
    }
}

/// Frame-to-bin assignment shared by every pixel of a sequence: which
/// samples fall inside the window's complete cycles, and into which bin.
struct BinPlan {
    /// (sample index, bin) for every included sample.
    assignments: Vec<(usize, usize)>,
    phase_bins: usize,
    n_cycles: usize,
}

fn plan_bins(
    times: &[f64],
    median_dt: f64,
    warp: &TimeWarp,
    window_start: f64,
    cfg: &LockInConfig,
) -> Result<BinPlan> {
    cfg.validate()?;
    let t_rr = warp.t_rr();
    let phase_bins = cfg.resolve_bins(t_rr, median_dt);
    let window_end = window_start + cfg.window;

    // A cycle is complete when both bounding R-peaks lie inside the
    // (closed) window.
    let peaks = warp.breakpoints_in();
    let first_inside = peaks.partition_point(|&p| p < window_start - EDGE_EPS);
    let last_inside = peaks.partition_point(|&p| p <= window_end + EDGE_EPS);
    let n_cycles = last_inside.saturating_sub(first_inside + 1);
    if n_cycles < cfg.min_cycles {
        return Err(Error::WindowUnderpopulated {
            window_start,
            found: n_cycles,
            needed: cfg.min_cycles,
        });
    }
    let cycle_range = first_inside..first_inside + n_cycles;

    let mut assignments = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        if t < window_start || t >= window_end || !warp.contains(t) {
            continue;
        }
        let (cycle, phase) = warp.phase_of(t)?;
        if !cycle_range.contains(&cycle) {
            continue;
        }
        let bin = ((phase / t_rr * phase_bins as f64 + BIN_NUDGE).floor() as usize)
            .min(phase_bins - 1);
        assignments.push((i, bin));
    }
    Ok(BinPlan { assignments, phase_bins, n_cycles })
}

/// Assign one pixel's in-window samples to phase bins.
///
/// Only samples from complete cycles are kept; a window with fewer than
/// `cfg.min_cycles` complete cycles is an error carrying the count found.
pub fn bin_cycles(
    series: &PixelSeries,
    warp: &TimeWarp,
    window_start: f64,
    cfg: &LockInConfig,
) -> Result<BinnedCycles> {
    let plan = plan_bins(&series.times, series.median_interval(), warp, window_start, cfg)?;
    let mut bins = vec![Vec::new(); plan.phase_bins];
    for &(i, bin) in &plan.assignments {
        bins[bin].push(series.values[i]);
    }
    Ok(BinnedCycles {
        window_start,
        t_rr: warp.t_rr(),
        n_cycles: plan.n_cycles,
        pooled_pixels: series.pooled_pixels,
        bins,
    })
}

/// Population standard deviation (divisor `N`) and standard error per
/// bin. The standard error counts frames times pooled pixels:
/// `se = sd / sqrt(count * pooled_pixels)`. Empty bins yield `NaN`.
pub fn standard_error(binned: &BinnedCycles, pooled_pixels: u32) -> (Vec<f64>, Vec<f64>) {
    let mut sd = Vec::with_capacity(binned.bins.len());
    let mut se = Vec::with_capacity(binned.bins.len());
    for samples in &binned.bins {
        if samples.is_empty() {
            sd.push(f64::NAN);
            se.push(f64::NAN);
            continue;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let s = var.sqrt();
        sd.push(s);
        se.push(s / (n * pooled_pixels as f64).sqrt());
    }
    (sd, se)
}

/// Average the binned samples into a [`CycleProfile`].
///
/// Errors only when every bin is empty; individual empty bins are flagged
/// in the profile.
pub fn synchronous_average(binned: &BinnedCycles) -> Result<CycleProfile> {
    if binned.bins.iter().all(Vec::is_empty) {
        return Err(Error::DegenerateWindow { window_start: binned.window_start });
    }
    let bins = binned.bins.len();
    let mut mean = Vec::with_capacity(bins);
    let mut sample_count = Vec::with_capacity(bins);
    for samples in &binned.bins {
        sample_count.push(samples.len());
        if samples.is_empty() {
            mean.push(f64::NAN);
        } else {
            mean.push(samples.iter().sum::<f64>() / samples.len() as f64);
        }
    }
    let (sd, se) = standard_error(binned, binned.pooled_pixels);
    Ok(CycleProfile {
        phase_bin_centers: (0..bins).map(|b| binned.bin_center(b)).collect(),
        mean,
        sd,
        se,
        sample_count,
        pooled_pixels: binned.pooled_pixels,
        t_rr: binned.t_rr,
        window_start: binned.window_start,
        n_cycles: binned.n_cycles,
    })
}

/// Slide the lock-in window over one pixel's series.
///
/// Windows start at the series origin and step by `cfg.slide` while the
/// full window fits inside the recording. Underpopulated windows are
/// skipped and reported, not fatal.
pub fn sliding_lockin(
    series: &PixelSeries,
    warp: &TimeWarp,
    cfg: &LockInConfig,
) -> Result<SlidingLockIn> {
    cfg.validate()?;
    let duration = series.duration();
    if duration + EDGE_EPS < cfg.window {
        return Err(Error::SeriesTooShort { duration, window: cfg.window });
    }
    let start = series.times[0];
    let mut windows = Vec::new();
    let mut skipped = Vec::new();
    let mut k = 0usize;
    loop {
        let window_start = start + k as f64 * cfg.slide;
        if window_start + cfg.window > start + duration + EDGE_EPS {
            break;
        }
        match bin_cycles(series, warp, window_start, cfg).and_then(|b| synchronous_average(&b)) {
            Ok(profile) => windows.push(WindowResult { window_start, profile }),
            Err(Error::WindowUnderpopulated { found, .. }) => {
                skipped.push(SkippedWindow { window_start, cycles_found: found });
            }
            Err(Error::DegenerateWindow { .. }) => {
                skipped.push(SkippedWindow { window_start, cycles_found: 0 });
            }
            Err(other) => return Err(other),
        }
        k += 1;
    }
    Ok(SlidingLockIn { windows, skipped })
}

/// Lock-in over every interior pixel of a sequence for one window.
///
/// Per pixel: 3x3 pooling, phase binning, synchronous averaging; then
/// amplitude as half the peak-to-peak swing of the bin means, phase from
/// the fundamental cycle component (relative to the R-peak), and the mean
/// standard error. Pixels whose preconditions fail are marked invalid.
/// Pixels are processed in parallel; the output does not depend on the
/// execution order.
pub fn lockin_map<T: Scalar>(
    seq: &ThermalSequence<T>,
    warp: &TimeWarp,
    window_start: f64,
    cfg: &LockInConfig,
) -> Result<LockInMap> {
    let plan = plan_bins(
        seq.timestamps(),
        seq.median_frame_interval(),
        warp,
        window_start,
        cfg,
    )?;
    let interior_width = seq.width() - 2;
    let interior_height = seq.height() - 2;
    let t_rr = warp.t_rr();

    let per_pixel: Vec<(f64, f64, f64, bool)> = (0..interior_width * interior_height)
        .into_par_iter()
        .map(|idx| {
            let pixel = Pixel::new(idx / interior_width + 1, idx % interior_width + 1);
            let series = match spatial_average_3x3(seq, pixel) {
                Ok(s) => s,
                Err(_) => return (f64::NAN, f64::NAN, f64::NAN, false),
            };
            let mut bins = vec![Vec::new(); plan.phase_bins];
            for &(i, bin) in &plan.assignments {
                bins[bin].push(series.values[i]);
            }
            let binned = BinnedCycles {
                window_start,
                t_rr,
                n_cycles: plan.n_cycles,
                pooled_pixels: series.pooled_pixels,
                bins,
            };
            match synchronous_average(&binned) {
                Ok(profile) => {
                    let (amplitude, phase) = amplitude_and_phase(&profile);
                    let populated: Vec<f64> = profile
                        .se
                        .iter()
                        .zip(&profile.sample_count)
                        .filter(|(_, &c)| c > 0)
                        .map(|(&se, _)| se)
                        .collect();
                    let se_mean = populated.iter().sum::<f64>() / populated.len() as f64;
                    (amplitude, phase, se_mean, true)
                }
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, false),
            }
        })
        .collect();

    let mut amplitude = Vec::with_capacity(per_pixel.len());
    let mut phase = Vec::with_capacity(per_pixel.len());
    let mut se_mean = Vec::with_capacity(per_pixel.len());
    let mut valid = Vec::with_capacity(per_pixel.len());
    for (a, p, s, v) in per_pixel {
        amplitude.push(a);
        phase.push(p);
        se_mean.push(s);
        valid.push(v);
    }
    Ok(LockInMap {
        interior_width,
        interior_height,
        t_rr,
        window_start,
        amplitude,
        phase,
        se_mean,
        valid,
    })
}

/// Half peak-to-peak amplitude of the bin means and the phase of their
/// fundamental component; phase is `NaN` when the amplitude is zero.
fn amplitude_and_phase(profile: &CycleProfile) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut re = 0.0;
    let mut im = 0.0;
    for b in 0..profile.mean.len() {
        if profile.is_bin_empty(b) {
            continue;
        }
        let m = profile.mean[b];
        lo = lo.min(m);
        hi = hi.max(m);
        let theta = std::f64::consts::TAU * profile.phase_bin_centers[b] / profile.t_rr;
        // Projection onto cos(theta + phi): sum f(theta) e^{-i theta}
        // carries the phase phi in its argument.
        re += m * theta.cos();
        im -= m * theta.sin();
    }
    let amplitude = (hi - lo) / 2.0;
    if amplitude > 0.0 {
        (amplitude, normalize_phase(im.atan2(re)))
    } else {
        (amplitude, f64::NAN)
    }
}

/// Wrap into (-pi, pi].
pub(crate) fn normalize_phase(phase: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut p = phase.rem_euclid(tau);
    if p > std::f64::consts::PI {
        p -= tau;
    }
    p
}
