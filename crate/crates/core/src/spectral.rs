//! Per-pixel spectral analysis at the cardiac frequency.
//!
//! Instead of picking observation points by hand, every interior pixel is
//! projected onto a single sinusoid at the heartbeat frequency on the
//! warped timeline. Pixels over arteries show up as amplitude peaks, and
//! the phase map separates vessels that warm and cool at opposite points
//! of the cycle. Samples are nonuniform after warping, so the projection
//! is a least-squares fit of a cos/sin pair plus an intercept rather than
//! an FFT bin.

use rayon::prelude::*;

use crate::ecg::{mean_rr, RPeakSeries};
use crate::error::{Error, Result};
use crate::lockin::normalize_phase;
use crate::scalar::Scalar;
use crate::thermal::{spatial_average_3x3, Pixel, PixelSeries, ThermalSequence};
use crate::warp::TimeWarp;

/// Minimum number of cycles the fitted span must cover.
const MIN_CYCLES_SPANNED: f64 = 4.0;

/// Per-pixel amplitude and phase at one frequency over the frame
/// interior.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    interior_width: usize,
    interior_height: usize,
    pub cardiac_frequency: f64,
    /// Fitted oscillation amplitude, kelvin; `NaN` on invalid pixels.
    pub amplitude: Vec<f64>,
    /// Phase relative to warped time zero (the R-peak), radians in
    /// (-pi, pi].
    pub phase: Vec<f64>,
    pub valid: Vec<bool>,
}

impl SpectralMap {
    pub fn interior_width(&self) -> usize {
        self.interior_width
    }

    pub fn interior_height(&self) -> usize {
        self.interior_height
    }

    pub fn source_pixel(&self, index: usize) -> Pixel {
        Pixel::new(index / self.interior_width + 1, index % self.interior_width + 1)
    }

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

/// Heartbeat frequency implied by a peak series: `1 / mean_rr`.
pub fn cardiac_frequency(peaks: &RPeakSeries) -> Result<f64> {
    Ok(1.0 / mean_rr(peaks)?)
}

/// Least-squares projection of one pixel's series onto
/// `a cos(2 pi f tau) + b sin(2 pi f tau) + c` over warped time `tau`.
///
/// Returns the oscillation written as `A cos(2 pi f tau + phi)`:
/// amplitude `A = hypot(a, b)` and phase `phi` relative to warped time
/// zero, which is the first R-peak. Samples outside the warp domain are
/// ignored; the remaining span must cover at least four cycles at `f`.
pub fn pixel_amplitude_at(
    series: &PixelSeries,
    warp: &TimeWarp,
    frequency: f64,
) -> Result<(f64, f64)> {
    let mut warped = Vec::with_capacity(series.len());
    let mut values = Vec::with_capacity(series.len());
    for (i, &t) in series.times.iter().enumerate() {
        if warp.contains(t) {
            warped.push(warp.warp_time(t)?);
            values.push(series.values[i]);
        }
    }
    fit_single_frequency(&warped, &values, frequency)
}

fn fit_single_frequency(warped: &[f64], values: &[f64], frequency: f64) -> Result<(f64, f64)> {
    let spanned = match (warped.first(), warped.last()) {
        (Some(first), Some(last)) => (last - first) * frequency,
        _ => 0.0,
    };
    if spanned < MIN_CYCLES_SPANNED {
        return Err(Error::SpanTooShort {
            spanned,
            frequency,
            needed: MIN_CYCLES_SPANNED,
        });
    }

    // Normal equations for [cos, sin, 1]; solved directly since the
    // system is only 3x3. The intercept absorbs the baseline so it cannot
    // leak into the quadrature pair on short or uneven spans.
    let omega = std::f64::consts::TAU * frequency;
    let (mut scc, mut css, mut csc, mut sc, mut ss) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut yc, mut ys, mut sy) = (0.0, 0.0, 0.0);
    for (&tau, &y) in warped.iter().zip(values) {
        let c = (omega * tau).cos();
        let s = (omega * tau).sin();
        scc += c * c;
        css += s * s;
        csc += s * c;
        sc += c;
        ss += s;
        yc += y * c;
        ys += y * s;
        sy += y;
    }
    let n = warped.len() as f64;
    let matrix = [[scc, csc, sc], [csc, css, ss], [sc, ss, n]];
    let rhs = [yc, ys, sy];
    let [a, b, _baseline] = solve_3x3(matrix, rhs).ok_or(Error::SpanTooShort {
        spanned,
        frequency,
        needed: MIN_CYCLES_SPANNED,
    })?;

    let amplitude = a.hypot(b);
    let phase = if amplitude > 0.0 {
        normalize_phase((-b).atan2(a))
    } else {
        f64::NAN
    };
    Ok((amplitude, phase))
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_3x3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| {
            m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("finite matrix")
        })?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Spectral map over every interior pixel using 3x3-pooled series.
///
/// Pass `frequency = 1 / warp.t_rr()` for the cardiac map; pixels whose
/// fit preconditions fail are marked invalid. Pixels are processed in
/// parallel with order-independent output.
pub fn artery_map<T: Scalar>(
    seq: &ThermalSequence<T>,
    warp: &TimeWarp,
    frequency: f64,
) -> Result<SpectralMap> {
    let interior_width = seq.width() - 2;
    let interior_height = seq.height() - 2;

    // The warped sample times are shared by every pixel.
    let mut kept_frames = Vec::new();
    let mut warped = Vec::new();
    for (i, &t) in seq.timestamps().iter().enumerate() {
        if warp.contains(t) {
            kept_frames.push(i);
            warped.push(warp.warp_time(t)?);
        }
    }

    let per_pixel: Vec<(f64, f64, bool)> = (0..interior_width * interior_height)
        .into_par_iter()
        .map(|idx| {
            let pixel = Pixel::new(idx / interior_width + 1, idx % interior_width + 1);
            let series = match spatial_average_3x3(seq, pixel) {
                Ok(s) => s,
                Err(_) => return (f64::NAN, f64::NAN, false),
            };
            let values: Vec<f64> = kept_frames.iter().map(|&i| series.values[i]).collect();
            match fit_single_frequency(&warped, &values, frequency) {
                Ok((amplitude, phase)) => (amplitude, phase, true),
                Err(_) => (f64::NAN, f64::NAN, false),
            }
        })
        .collect();

    let mut amplitude = Vec::with_capacity(per_pixel.len());
    let mut phase = Vec::with_capacity(per_pixel.len());
    let mut valid = Vec::with_capacity(per_pixel.len());
    for (a, p, v) in per_pixel {
        amplitude.push(a);
        phase.push(p);
        valid.push(v);
    }
    Ok(SpectralMap {
        interior_width,
        interior_height,
        cardiac_frequency: frequency,
        amplitude,
        phase,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::{build_warp, TRr};
    use approx::assert_relative_eq;

    fn uniform_warp(n_peaks: usize) -> TimeWarp {
        let peaks: Vec<f64> = (0..n_peaks).map(|k| k as f64).collect();
        build_warp(&RPeakSeries::new(peaks).unwrap(), TRr::Auto).unwrap()
    }

    fn series_30fps(duration: f64, f: impl Fn(f64) -> f64) -> PixelSeries {
        let n = (duration * 30.0).round() as usize;
        let times: Vec<f64> = (0..n).map(|k| k as f64 / 30.0).collect();
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        PixelSeries::new(Pixel::new(1, 1), times, values, 9).unwrap()
    }

    #[test]
    fn frequency_is_reciprocal_mean_rr() {
        let peaks = RPeakSeries::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(cardiac_frequency(&peaks).unwrap(), 1.0, epsilon = 1e-12);
        let fast = RPeakSeries::new(vec![0.0, 0.8, 1.6, 2.4]).unwrap();
        assert_relative_eq!(cardiac_frequency(&fast).unwrap(), 1.25, epsilon = 1e-12);
        let lone = RPeakSeries::new(vec![0.0]).unwrap();
        assert!(cardiac_frequency(&lone).is_err());
    }

    #[test]
    fn recovers_a_pure_sine_exactly() {
        // A sin(2 pi f tau) has amplitude A and phase -pi/2 in the
        // cos(2 pi f tau + phi) convention.
        let warp = uniform_warp(16);
        let amplitude = 0.01;
        let series =
            series_30fps(15.0, |t| 307.0 + amplitude * (std::f64::consts::TAU * t).sin());
        let (a, phi) = pixel_amplitude_at(&series, &warp, 1.0).unwrap();
        assert!((a - amplitude).abs() < 1e-6, "amplitude {a}");
        assert!((phi + std::f64::consts::FRAC_PI_2).abs() < 1e-3, "phase {phi}");
    }

    #[test]
    fn constant_series_has_zero_amplitude() {
        let warp = uniform_warp(16);
        let series = series_30fps(15.0, |_| 310.0);
        let (a, _) = pixel_amplitude_at(&series, &warp, 1.0).unwrap();
        assert!(a < 1e-10, "amplitude {a}");
    }

    #[test]
    fn second_harmonic_leaks_below_five_percent() {
        let warp = uniform_warp(16);
        let amplitude = 0.01;
        let series =
            series_30fps(15.0, |t| amplitude * (2.0 * std::f64::consts::TAU * t).sin());
        let (a, _) = pixel_amplitude_at(&series, &warp, 1.0).unwrap();
        assert!(a < 0.05 * amplitude, "leakage {a}");
    }

    #[test]
    fn short_span_is_rejected() {
        let warp = uniform_warp(4);
        let series = series_30fps(3.0, |t| t);
        assert!(matches!(
            pixel_amplitude_at(&series, &warp, 1.0),
            Err(Error::SpanTooShort { .. })
        ));
    }

    #[test]
    fn phase_shift_moves_reported_phase() {
        let warp = uniform_warp(16);
        for shift in [0.4, 1.3, -2.0] {
            let base =
                series_30fps(15.0, |t| 0.01 * (std::f64::consts::TAU * t).cos());
            let shifted = series_30fps(15.0, |t| {
                0.01 * (std::f64::consts::TAU * t + shift).cos()
            });
            let (_, p0) = pixel_amplitude_at(&base, &warp, 1.0).unwrap();
            let (_, p1) = pixel_amplitude_at(&shifted, &warp, 1.0).unwrap();
            let diff = normalize_phase(p1 - p0 - shift);
            assert!(diff.abs() < 1e-3, "shift {shift}: residual {diff}");
        }
    }

    #[test]
    fn map_separates_antiphase_blocks() {
        let width = 16;
        let height = 8;
        let frames = 10 * 30;
        let times: Vec<f64> = (0..frames).map(|k| k as f64 / 30.0).collect();
        let mut data = Vec::with_capacity(frames * width * height);
        for &t in &times {
            let osc = 0.010 * (std::f64::consts::TAU * t).cos();
            for r in 0..height {
                for c in 0..width {
                    let left = (2..5).contains(&r) && (2..5).contains(&c);
                    let right = (2..5).contains(&r) && (10..13).contains(&c);
                    let v = if left {
                        307.0 + osc
                    } else if right {
                        307.0 - osc
                    } else {
                        307.0
                    };
                    data.push(v);
                }
            }
        }
        let seq = ThermalSequence::new(width, height, times, data).unwrap();
        let warp = uniform_warp(11);
        let map = artery_map(&seq, &warp, 1.0).unwrap();

        let left = map.index_of_source(Pixel::new(3, 3)).unwrap();
        let right = map.index_of_source(Pixel::new(3, 11)).unwrap();
        let far = map.index_of_source(Pixel::new(6, 6)).unwrap();
        assert!(map.valid[left] && map.valid[right]);
        assert_relative_eq!(map.amplitude[left], 0.010, max_relative = 0.02);
        assert!(map.amplitude[far] < 1e-9);
        let diff = normalize_phase(map.phase[left] - map.phase[right]).abs();
        assert!((diff - std::f64::consts::PI).abs() < 0.05, "separation {diff}");
    }

    #[test]
    fn spectral_and_lockin_amplitudes_agree_on_clean_signal() {
        use crate::lockin::{bin_cycles, synchronous_average, LockInConfig};
        let warp = uniform_warp(16);
        let series =
            series_30fps(15.0, |t| 307.0 + 0.01 * (std::f64::consts::TAU * t).cos());
        let (spectral_amplitude, _) = pixel_amplitude_at(&series, &warp, 1.0).unwrap();

        let cfg = LockInConfig::default();
        let profile =
            synchronous_average(&bin_cycles(&series, &warp, 0.0, &cfg).unwrap()).unwrap();
        let hi = profile.mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = profile.mean.iter().cloned().fold(f64::INFINITY, f64::min);
        let lockin_amplitude = (hi - lo) / 2.0;
        assert!(
            (spectral_amplitude - lockin_amplitude).abs() / spectral_amplitude < 0.05,
            "spectral {spectral_amplitude} vs lockin {lockin_amplitude}"
        );
    }
}
