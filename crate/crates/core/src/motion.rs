//! Inter-frame motion scoring and low-motion segment selection.
//!
//! Subject motion moves the arteries under the pixels and breaks the
//! coherence that synchronous averaging depends on, so analysis runs on
//! the stillest stretch of the recording. Motion is scored with exhaustive
//! integer block matching on a center crop: a deterministic,
//! dependency-free stand-in for optical flow that is easy to test and
//! entirely sufficient for gating.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::thermal::ThermalSequence;

/// Block-matching search radius in pixels.
const SEARCH_RADIUS: i64 = 3;
/// Crop margin; equals the search radius so every shift compares the same
/// crop of the earlier frame.
const CROP_MARGIN: usize = SEARCH_RADIUS as usize;
/// A candidate shift must undercut the incumbent's mean absolute
/// difference by this relative margin. Smaller shifts are tried first, so
/// i.i.d. noise keeps the zero shift instead of wandering to whichever of
/// the 49 candidates fluctuated lowest; a real translation still wins
/// outright because its matched difference drops to the noise floor.
const SHIFT_PREFERENCE_MARGIN: f64 = 0.10;

/// Motion verdict for one consecutive frame pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionScore {
    /// Best-shift mean absolute difference, normalized by the earlier
    /// frame's spread, plus the magnitude of that shift in pixels.
    /// Identical frames score 0.
    pub score: f64,
    /// Displacement (rows, cols) of the earlier frame's content in the
    /// later frame at the difference minimum.
    pub shift: (i64, i64),
}

/// Score every consecutive frame pair.
///
/// For pair `(k, k+1)`, the mean absolute difference
/// `mad(d) = mean |frame_{k+1}(p + d) - frame_k(p)|` is minimized over
/// integer shifts `d` in `[-3, 3]^2` on a center crop, normalized by the
/// mean absolute deviation of frame `k` from its own crop mean, and the
/// winning shift magnitude is added on top. Frame pairs are scored
/// independently and in parallel.
pub fn motion_score<T: Scalar>(seq: &ThermalSequence<T>) -> Result<Vec<MotionScore>> {
    if seq.frame_count() < 2 {
        return Err(Error::TooFewFrames { got: seq.frame_count() });
    }
    let (w, h) = (seq.width(), seq.height());
    if w < 2 * CROP_MARGIN + 1 || h < 2 * CROP_MARGIN + 1 {
        return Err(Error::FramesTooSmall { width: w, height: h });
    }

    let shifts = shift_candidates();
    let scores = (0..seq.frame_count() - 1)
        .into_par_iter()
        .map(|k| score_pair(seq.frame(k), seq.frame(k + 1), w, h, &shifts))
        .collect();
    Ok(scores)
}

/// All shifts in the search square, smallest displacement first.
fn shift_candidates() -> Vec<(i64, i64)> {
    let mut shifts = Vec::with_capacity((2 * SEARCH_RADIUS as usize + 1).pow(2));
    for dr in -SEARCH_RADIUS..=SEARCH_RADIUS {
        for dc in -SEARCH_RADIUS..=SEARCH_RADIUS {
            shifts.push((dr, dc));
        }
    }
    shifts.sort_by_key(|&(dr, dc)| (dr * dr + dc * dc, dr, dc));
    shifts
}

fn score_pair<T: Scalar>(
    earlier: &[T],
    later: &[T],
    width: usize,
    height: usize,
    shifts: &[(i64, i64)],
) -> MotionScore {
    let rows = CROP_MARGIN..height - CROP_MARGIN;
    let cols = CROP_MARGIN..width - CROP_MARGIN;
    let crop_len = (rows.len() * cols.len()) as f64;

    let mut best_shift = shifts[0];
    let mut best_mad = f64::INFINITY;
    for &(dr, dc) in shifts {
        let mut acc = 0.0_f64;
        for r in rows.clone() {
            let base = r * width;
            let shifted = (r as i64 + dr) as usize * width;
            for c in cols.clone() {
                let target = later[shifted + (c as i64 + dc) as usize].to_accum();
                acc += (target - earlier[base + c].to_accum()).abs();
            }
        }
        let mad = acc / crop_len;
        if mad < best_mad * (1.0 - SHIFT_PREFERENCE_MARGIN) {
            best_mad = mad;
            best_shift = (dr, dc);
        }
    }

    let mut mean = 0.0_f64;
    for r in rows.clone() {
        for c in cols.clone() {
            mean += earlier[r * width + c].to_accum();
        }
    }
    mean /= crop_len;
    let mut spread = 0.0_f64;
    for r in rows.clone() {
        for c in cols.clone() {
            spread += (earlier[r * width + c].to_accum() - mean).abs();
        }
    }
    spread /= crop_len;

    let normalized = if spread > 0.0 {
        best_mad / spread
    } else if best_mad == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let magnitude = ((best_shift.0 * best_shift.0 + best_shift.1 * best_shift.1) as f64).sqrt();
    MotionScore { score: normalized + magnitude, shift: best_shift }
}

/// Contiguous window of the requested duration with the smallest total
/// motion score; ties break toward the earliest start.
///
/// Candidate starts are frame timestamps; a pair contributes to a window
/// when both its frames lie inside. Returns `(start, end)` with
/// `end = start + duration`.
pub fn select_low_motion_segment<T: Scalar>(
    seq: &ThermalSequence<T>,
    duration: f64,
) -> Result<(f64, f64)> {
    const EPS: f64 = 1e-9;
    let total = seq.duration();
    if duration > total + EPS {
        return Err(Error::SegmentTooLong { duration: total, requested: duration });
    }
    let scores = motion_score(seq)?;
    let times = seq.timestamps();

    let mut prefix = vec![0.0_f64; scores.len() + 1];
    for (k, s) in scores.iter().enumerate() {
        prefix[k + 1] = prefix[k] + s.score;
    }

    let mut best_start = times[0];
    let mut best_sum = f64::INFINITY;
    for (i, &start) in times.iter().enumerate() {
        if start + duration > times[0] + total + EPS {
            break;
        }
        // Pairs i..hi have both frames inside [start, start + duration].
        let hi = times.partition_point(|&t| t <= start + duration + EPS).saturating_sub(1);
        let sum = if hi > i { prefix[hi] - prefix[i] } else { 0.0 };
        if sum < best_sum {
            best_sum = sum;
            best_start = start;
        }
    }
    Ok((best_start, best_start + duration))
}
