//! Heartbeat-referenced lock-in thermography.
//!
//! Skin temperature oscillates with the cardiac cycle at the ~10 mK scale,
//! far below the per-frame noise floor of an uncooled thermal camera. This
//! crate recovers those oscillations by synchronous averaging: R-peaks are
//! detected on a simultaneously recorded ECG, the quasi-periodic cardiac
//! timeline is rescaled so that every beat has the same period, thermal
//! frame timestamps are mapped through the same rescaling, and per-pixel
//! samples are pooled into phase bins and averaged over many cycles. A
//! cardiac-synchronous signal adds coherently while zero-mean noise shrinks
//! as `1/sqrt(N)`.
//!
//! The pipeline stages map onto the modules of this crate:
//!
//! * [`ecg`] — adaptive-threshold R-peak detection and RR statistics,
//! * [`warp`] — the piecewise-linear map that makes R-peaks periodic,
//! * [`lockin`] — phase-binned synchronous averaging with SD/SE over
//!   sliding windows, per pixel and across the whole frame,
//! * [`spectral`] — per-pixel single-frequency projection at the cardiac
//!   frequency for artery-like pixel mapping,
//! * [`motion`] — block-matching motion scores and low-motion segment
//!   selection,
//! * [`synth`] — paired synthetic ECG + thermal generators with exact
//!   ground truth, so every stage is testable without recordings,
//! * [`io`] — the THS1 thermal container and ECG CSV formats.
//!
//! Temperature storage is generic over the scalar type (`f32` on disk,
//! `f64` for exact test fixtures); all averaging accumulates in `f64`
//! regardless of the storage scalar.

pub mod ecg;
pub mod error;
pub mod io;
pub mod lockin;
pub mod motion;
pub mod scalar;
pub mod spectral;
pub mod synth;
pub mod thermal;
pub mod warp;

pub use error::{Error, ErrorCategory, Result};
pub use scalar::Scalar;

pub use ecg::{detect_rpeaks, mean_rr, rr_intervals, DetectorConfig, EcgTrace, RPeakSeries};
pub use lockin::{
    bin_cycles, lockin_map, sliding_lockin, standard_error, synchronous_average, BinnedCycles,
    CycleProfile, LockInConfig, LockInMap, SlidingLockIn, WindowResult,
};
pub use motion::{motion_score, select_low_motion_segment, MotionScore};
pub use spectral::{artery_map, cardiac_frequency, pixel_amplitude_at, SpectralMap};
pub use synth::{
    block_mask, synth_dataset, synth_ecg, synth_thermal, synth_thermal_parts, GroundTruth,
    SynthConfig, Waveform,
};
pub use thermal::{
    spatial_average_3x3, validate_sequence, Pixel, PixelSeries, ThermalSequence, ValidationReport,
};
pub use warp::{build_warp, TRr, TimeWarp};

/// Thermal sequence at the storage precision used by the THS1 container.
pub type ThermalSequence32 = ThermalSequence<f32>;
/// Thermal sequence at accumulation precision, for exact fixtures in tests.
pub type ThermalSequence64 = ThermalSequence<f64>;
