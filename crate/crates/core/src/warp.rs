//! Piecewise-linear rescaling that makes R-peaks periodic.
//!
//! The cardiac timeline between consecutive R-peaks is stretched or
//! compressed so that peak `k` lands exactly at `k * t_rr`. Thermal frame
//! timestamps are mapped through the same function, after which every
//! heartbeat cycle occupies the same `[0, t_rr)` phase interval and
//! frames can be averaged synchronously.

use crate::ecg::RPeakSeries;
use crate::error::{Error, Result};

/// Common cycle period: the segment's mean RR interval, or an explicit
/// override (e.g. 1.0 s to normalize heart rates across recordings).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TRr {
    Auto,
    Fixed(f64),
}

/// Piecewise-linear map from recorded time to the periodic cardiac
/// timeline. Immutable after construction and strictly increasing on its
/// domain `[first peak, last peak]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWarp {
    breakpoints_in: Vec<f64>,
    t_rr: f64,
}

/// Build the warp from detected peaks. Peak `k` maps to exactly
/// `k * t_rr`; between peaks the map interpolates linearly.
pub fn build_warp(peaks: &RPeakSeries, t_rr: TRr) -> Result<TimeWarp> {
    let times = peaks.peak_times();
    if times.len() < 2 {
        return Err(Error::InsufficientPeaks { found: times.len(), needed: 2 });
    }
    let t_rr = match t_rr {
        TRr::Auto => crate::ecg::mean_rr(peaks)?,
        TRr::Fixed(v) => v,
    };
    if !(t_rr > 0.0) || !t_rr.is_finite() {
        return Err(Error::InvalidTRr { t_rr });
    }
    Ok(TimeWarp { breakpoints_in: times.to_vec(), t_rr })
}

impl TimeWarp {
    /// Original R-peak times anchoring the map.
    pub fn breakpoints_in(&self) -> &[f64] {
        &self.breakpoints_in
    }

    /// Warped anchor for peak `k`, exactly `k * t_rr`.
    pub fn breakpoint_out(&self, k: usize) -> f64 {
        k as f64 * self.t_rr
    }

    pub fn t_rr(&self) -> f64 {
        self.t_rr
    }

    /// Number of cycles spanned: peaks minus one.
    pub fn n_cycles(&self) -> usize {
        self.breakpoints_in.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints_in[0], self.breakpoints_in[self.breakpoints_in.len() - 1])
    }

    pub fn contains(&self, t: f64) -> bool {
        let (start, end) = self.domain();
        t >= start && t <= end
    }

    /// Index of the segment containing `t`: the largest `k` with
    /// `breakpoints_in[k] <= t`, capped at the last segment.
    fn segment_of(&self, t: f64) -> Result<usize> {
        let (start, end) = self.domain();
        if !(t >= start && t <= end) {
            return Err(Error::OutOfWarpDomain { t, start, end });
        }
        let k = self.breakpoints_in.partition_point(|&p| p <= t);
        Ok(k.saturating_sub(1).min(self.breakpoints_in.len() - 2))
    }

    /// Map a recorded time onto the periodic timeline.
    ///
    /// Exact at the breakpoints: an input equal to peak `k` returns
    /// `k * t_rr` with no interpolation rounding.
    pub fn warp_time(&self, t: f64) -> Result<f64> {
        let k = self.segment_of(t)?;
        if t == self.breakpoints_in[k] {
            return Ok(self.breakpoint_out(k));
        }
        if t == self.breakpoints_in[k + 1] {
            return Ok(self.breakpoint_out(k + 1));
        }
        let (a, b) = (self.breakpoints_in[k], self.breakpoints_in[k + 1]);
        Ok(self.breakpoint_out(k) + (t - a) / (b - a) * self.t_rr)
    }

    /// Inverse of [`TimeWarp::warp_time`], from the periodic timeline back
    /// to recorded time.
    pub fn unwarp_time(&self, warped: f64) -> Result<f64> {
        let end = self.n_cycles() as f64 * self.t_rr;
        if !(warped >= 0.0 && warped <= end) {
            return Err(Error::OutOfWarpDomain { t: warped, start: 0.0, end });
        }
        let k = ((warped / self.t_rr).floor() as usize).min(self.n_cycles() - 1);
        let out_k = self.breakpoint_out(k);
        if warped == out_k {
            return Ok(self.breakpoints_in[k]);
        }
        let (a, b) = (self.breakpoints_in[k], self.breakpoints_in[k + 1]);
        Ok(a + (warped - out_k) / self.t_rr * (b - a))
    }

    /// Warped time with linear extension beyond the peak span, using the
    /// first/last segment's slope. [`TimeWarp::warp_time`] keeps its strict
    /// domain; this variant exists for signal synthesis, where the
    /// oscillation continues outside the detected span.
    pub fn warp_time_extended(&self, t: f64) -> f64 {
        let (start, end) = self.domain();
        if t < start {
            let (a, b) = (self.breakpoints_in[0], self.breakpoints_in[1]);
            return (t - a) / (b - a) * self.t_rr;
        }
        if t > end {
            let n = self.breakpoints_in.len();
            let (a, b) = (self.breakpoints_in[n - 2], self.breakpoints_in[n - 1]);
            return self.breakpoint_out(n - 1) + (t - b) / (b - a) * self.t_rr;
        }
        self.warp_time(t).expect("t inside domain")
    }

    /// Cycle index and in-cycle phase of a recorded time:
    /// `warp_time(t) = cycle * t_rr + phase` with `0 <= phase < t_rr`.
    ///
    /// Every peak `k` returns `(k, 0.0)`; at the right edge of the domain
    /// that means `(n_cycles, 0.0)`, the start of a cycle that the
    /// recording does not cover.
    pub fn phase_of(&self, t: f64) -> Result<(usize, f64)> {
        let k = self.segment_of(t)?;
        if t == self.breakpoints_in[k] {
            return Ok((k, 0.0));
        }
        if t == self.breakpoints_in[k + 1] {
            return Ok((k + 1, 0.0));
        }
        let (a, b) = (self.breakpoints_in[k], self.breakpoints_in[k + 1]);
        let phase = (t - a) / (b - a) * self.t_rr;
        // Interpolation rounding must not push the phase to a full period.
        if phase >= self.t_rr {
            return Ok((k + 1, 0.0));
        }
        Ok((k, phase.max(0.0)))
    }
}
