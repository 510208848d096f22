//! Thermal video model and pixel-neighborhood utilities.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A pixel coordinate as (row, col), row-major from the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl std::fmt::Display for Pixel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Timestamped stack of 2-D temperature frames in kelvin, row-major.
///
/// Frames are stored contiguously, frame-major; temperatures are generic
/// over the storage scalar (`f32` as written by the THS1 container, `f64`
/// for exact fixtures). Timestamps and the ECG trace share one clock.
///
/// Immutable after construction; construction enforces the invariants
/// (strictly increasing timestamps, finite temperatures, geometry at least
/// 3x3 so a full neighborhood exists somewhere).
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSequence<T: Scalar> {
    width: usize,
    height: usize,
    timestamps: Vec<f64>,
    data: Vec<T>,
}

impl<T: Scalar> ThermalSequence<T> {
    /// Build a sequence and check every invariant.
    ///
    /// `frames` holds `timestamps.len() * height * width` temperatures,
    /// frame-major then row-major.
    pub fn new(width: usize, height: usize, timestamps: Vec<f64>, frames: Vec<T>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::SequenceTooSmall { width, height });
        }
        if timestamps.is_empty() {
            return Err(Error::EmptySequence);
        }
        let expected = timestamps
            .len()
            .checked_mul(width * height)
            .expect("frame payload size fits in usize");
        if frames.len() != expected {
            return Err(Error::FrameSizeMismatch { expected, got: frames.len() });
        }
        if let Some(index) = timestamps.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonMonotonicTimestamps { index });
        }
        for (i, pair) in timestamps.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(Error::NonMonotonicTimestamps { index: i + 1 });
            }
        }
        let per_frame = width * height;
        for (i, v) in frames.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteTemperature {
                    frame: i / per_frame,
                    row: (i % per_frame) / width,
                    col: i % width,
                });
            }
        }
        Ok(Self { width, height, timestamps, data: frames })
    }

    /// Build without invariant checks, for callers that need to hold data
    /// pending validation (see [`validate_sequence`]).
    pub fn from_parts_unchecked(
        width: usize,
        height: usize,
        timestamps: Vec<f64>,
        frames: Vec<T>,
    ) -> Self {
        Self { width, height, timestamps, data: frames }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// One frame as a row-major slice of `height * width` temperatures.
    pub fn frame(&self, index: usize) -> &[T] {
        let per_frame = self.width * self.height;
        &self.data[index * per_frame..(index + 1) * per_frame]
    }

    /// Raw frame payload, frame-major.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn value(&self, frame: usize, row: usize, col: usize) -> T {
        self.data[frame * self.width * self.height + row * self.width + col]
    }

    /// Time covered by the recording, counting each frame as one median
    /// frame interval: `last - first + median_dt`.
    pub fn duration(&self) -> f64 {
        let span = self.timestamps[self.frame_count() - 1] - self.timestamps[0];
        span + self.median_frame_interval()
    }

    /// Median difference between consecutive timestamps. A single-frame
    /// sequence has no pairs, so the interval defaults to zero.
    pub fn median_frame_interval(&self) -> f64 {
        let mut diffs: Vec<f64> = self.timestamps.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.is_empty() {
            return 0.0;
        }
        diffs.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));
        diffs[diffs.len() / 2]
    }

    /// Convert the storage scalar, e.g. `f64` fixtures to the `f32` that
    /// the THS1 container stores.
    pub fn cast<U: Scalar>(&self) -> ThermalSequence<U> {
        ThermalSequence {
            width: self.width,
            height: self.height,
            timestamps: self.timestamps.clone(),
            data: self.data.iter().map(|v| U::from_accum(v.to_accum())).collect(),
        }
    }
}

/// One pixel's temperature time series, usually after 3x3 spatial pooling.
///
/// Values are kept at accumulation precision regardless of the sequence's
/// storage scalar. `pooled_pixels` records how many camera pixels went into
/// each sample (9 after 3x3 pooling, 1 for a raw series); the standard
/// error downstream counts frames times pooled pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSeries {
    pub pixel: Pixel,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub pooled_pixels: u32,
}

impl PixelSeries {
    pub fn new(pixel: Pixel, times: Vec<f64>, values: Vec<f64>, pooled_pixels: u32) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::SeriesLengthMismatch { times: times.len(), values: values.len() });
        }
        for (i, pair) in times.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(Error::NonMonotonicTimestamps { index: i + 1 });
            }
        }
        Ok(Self { pixel, times, values, pooled_pixels })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Recording span including one trailing frame interval, matching
    /// [`ThermalSequence::duration`].
    pub fn duration(&self) -> f64 {
        if self.times.is_empty() {
            return 0.0;
        }
        let span = self.times[self.len() - 1] - self.times[0];
        span + self.median_interval()
    }

    pub fn median_interval(&self) -> f64 {
        let mut diffs: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.is_empty() {
            return 0.0;
        }
        diffs.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        diffs[diffs.len() / 2]
    }
}

/// Mean of a pixel and its 8 neighbors, per frame.
///
/// Border pixels are rejected rather than edge-clamped: the estimator is
/// defined on exactly one central and eight surrounding pixels, and
/// clamping would silently change it. Accumulation runs in `f64` even for
/// `f32` storage.
pub fn spatial_average_3x3<T: Scalar>(seq: &ThermalSequence<T>, pixel: Pixel) -> Result<PixelSeries> {
    let (h, w) = (seq.height(), seq.width());
    if pixel.row < 1 || pixel.row > h - 2 || pixel.col < 1 || pixel.col > w - 2 {
        return Err(Error::BorderPixel {
            row: pixel.row,
            col: pixel.col,
            width: w,
            height: h,
            max_row: h - 2,
            max_col: w - 2,
        });
    }
    let mut values = Vec::with_capacity(seq.frame_count());
    for k in 0..seq.frame_count() {
        let frame = seq.frame(k);
        let mut acc = 0.0_f64;
        for dr in -1i64..=1 {
            let row = (pixel.row as i64 + dr) as usize;
            let base = row * w + (pixel.col - 1);
            for v in &frame[base..base + 3] {
                acc += v.to_accum();
            }
        }
        values.push(acc / 9.0);
    }
    PixelSeries::new(pixel, seq.timestamps().to_vec(), values, 9)
}

/// Single-pixel series without pooling, for comparisons against the pooled
/// estimator. Valid for any pixel, border included.
pub fn raw_pixel_series<T: Scalar>(seq: &ThermalSequence<T>, pixel: Pixel) -> Result<PixelSeries> {
    if pixel.row >= seq.height() || pixel.col >= seq.width() {
        return Err(Error::BorderPixel {
            row: pixel.row,
            col: pixel.col,
            width: seq.width(),
            height: seq.height(),
            max_row: seq.height() - 1,
            max_col: seq.width() - 1,
        });
    }
    let values = (0..seq.frame_count())
        .map(|k| seq.value(k, pixel.row, pixel.col).to_accum())
        .collect();
    PixelSeries::new(pixel, seq.timestamps().to_vec(), values, 1)
}

/// Outcome of [`validate_sequence`]: a report, not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Indices `i` where `timestamps[i] <= timestamps[i-1]`.
    pub monotonicity_violations: Vec<usize>,
    /// Coordinates of non-finite temperatures as (frame, row, col).
    pub non_finite: Vec<(usize, usize, usize)>,
    /// Median-of-differences frame rate estimate in Hz, when computable.
    pub estimated_frame_rate: Option<f64>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.monotonicity_violations.is_empty() && self.non_finite.is_empty()
    }
}

/// Inspect a sequence (checked or unchecked) and report monotonicity
/// violations, non-finite values, and the estimated frame rate.
pub fn validate_sequence<T: Scalar>(seq: &ThermalSequence<T>) -> ValidationReport {
    let mut monotonicity_violations = Vec::new();
    for (i, pair) in seq.timestamps().windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            monotonicity_violations.push(i + 1);
        }
    }

    let per_frame = seq.width() * seq.height();
    let mut non_finite = Vec::new();
    for (i, v) in seq.data().iter().enumerate() {
        if !v.is_finite() {
            non_finite.push((i / per_frame, (i % per_frame) / seq.width(), i % seq.width()));
        }
    }

    let mut diffs: Vec<f64> = seq
        .timestamps()
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0 && d.is_finite())
        .collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).expect("finite diffs"));
    let estimated_frame_rate = if diffs.is_empty() { None } else { Some(1.0 / diffs[diffs.len() / 2]) };

    ValidationReport { monotonicity_violations, non_finite, estimated_frame_rate }
}
