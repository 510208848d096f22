//! Error type shared by all pipeline stages.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by callers that map errors to process exit
/// codes: malformed input files versus violated operation preconditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// A file could not be read or did not match its declared format.
    InputFormat,
    /// Inputs were well-formed but an operation precondition failed.
    Precondition,
}

#[derive(Debug, Error)]
pub enum Error {
    // --- construction / validation ---
    #[error("timestamps must be strictly increasing (violation at index {index})")]
    NonMonotonicTimestamps { index: usize },
    #[error("non-finite temperature at frame {frame}, pixel ({row}, {col})")]
    NonFiniteTemperature { frame: usize, row: usize, col: usize },
    #[error("non-finite ECG sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("frame geometry {width}x{height} too small; 3x3 averaging needs at least 3x3")]
    SequenceTooSmall { width: usize, height: usize },
    #[error("sequence must contain at least one frame")]
    EmptySequence,
    #[error("frame size mismatch: expected {expected} values, got {got}")]
    FrameSizeMismatch { expected: usize, got: usize },
    #[error("timestamp count {timestamps} does not match frame count {frames}")]
    TimestampCountMismatch { timestamps: usize, frames: usize },
    #[error("sample rate must be positive, got {rate} Hz")]
    InvalidSampleRate { rate: f64 },
    #[error("ECG trace needs at least 2 samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("peak times must be strictly increasing (violation at index {index})")]
    NonIncreasingPeaks { index: usize },
    #[error("series times and values differ in length: {times} vs {values}")]
    SeriesLengthMismatch { times: usize, values: usize },

    // --- ECG detection ---
    #[error("ECG trace too short: {duration:.3} s, detector warm-up needs {min:.3} s")]
    TraceTooShort { duration: f64, min: f64 },
    #[error("ECG sample rate {rate} Hz below the {min} Hz floor for 10 ms timing accuracy")]
    SampleRateTooLow { rate: f64, min: f64 },
    #[error("need at least {needed} R-peaks, found {found}")]
    InsufficientPeaks { found: usize, needed: usize },
    #[error("invalid detector configuration: {reason}")]
    InvalidDetectorConfig { reason: String },

    // --- neighborhoods / maps ---
    #[error(
        "pixel ({row}, {col}) has no full 3x3 neighborhood in a {width}x{height} frame; \
         rows 1..={max_row} and cols 1..={max_col} are valid"
    )]
    BorderPixel { row: usize, col: usize, width: usize, height: usize, max_row: usize, max_col: usize },

    // --- time warp ---
    #[error("t = {t:.6} s outside the warp domain [{start:.6}, {end:.6}] s")]
    OutOfWarpDomain { t: f64, start: f64, end: f64 },
    #[error("cycle period must be positive, got {t_rr} s")]
    InvalidTRr { t_rr: f64 },

    // --- lock-in ---
    #[error("invalid lock-in configuration: {reason}")]
    InvalidLockInConfig { reason: String },
    #[error(
        "window starting at {window_start:.3} s holds {found} complete cycles, need {needed}"
    )]
    WindowUnderpopulated { window_start: f64, found: usize, needed: usize },
    #[error("window starting at {window_start:.3} s has no populated phase bins")]
    DegenerateWindow { window_start: f64 },
    #[error("series spans {duration:.3} s, shorter than one {window:.3} s window")]
    SeriesTooShort { duration: f64, window: f64 },

    // --- spectral ---
    #[error("series spans {spanned:.2} cycles at {frequency:.3} Hz, need at least {needed}")]
    SpanTooShort { spanned: f64, frequency: f64, needed: f64 },

    // --- motion ---
    #[error("motion scoring needs at least 2 frames, got {got}")]
    TooFewFrames { got: usize },
    #[error("frames {width}x{height} too small for +/-3 px block matching (need at least 7x7)")]
    FramesTooSmall { width: usize, height: usize },
    #[error("sequence covers {duration:.3} s, cannot select a {requested:.3} s segment")]
    SegmentTooLong { duration: f64, requested: f64 },

    // --- synthesis ---
    #[error("invalid synthesis configuration: {}", problems.join("; "))]
    InvalidSynthConfig { problems: Vec<String> },
    #[error("artery mask pixel ({row}, {col}) outside the interior of a {width}x{height} frame")]
    MaskOutsideInterior { row: usize, col: usize, width: usize, height: usize },

    // --- file formats ---
    #[error("bad magic: expected \"THS1\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported THS1 version {found}, this reader understands version {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("truncated payload: header promises {expected} bytes, file holds {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("payload larger than header promises: {found} bytes, expected {expected}")]
    OversizedPayload { expected: u64, found: u64 },
    #[error("CSV line {line}: expected {expected} fields, got {got}")]
    RaggedCsv { line: usize, expected: usize, got: usize },
    #[error("CSV line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
    #[error("CSV header mismatch: expected {expected:?}, got {got:?}")]
    CsvHeader { expected: String, got: String },
    #[error("non-uniform sample spacing at row {index}: step {step:.9e} s vs nominal {nominal:.9e} s")]
    NonUniformSampling { index: usize, step: f64, nominal: f64 },
    #[error("ground truth JSON: {0}")]
    GroundTruthJson(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Classify for exit-code mapping: format/IO problems versus
    /// precondition failures.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            BadMagic { .. }
            | UnsupportedVersion { .. }
            | TruncatedPayload { .. }
            | OversizedPayload { .. }
            | RaggedCsv { .. }
            | CsvParse { .. }
            | CsvHeader { .. }
            | NonUniformSampling { .. }
            | GroundTruthJson(_)
            | Io(_) => ErrorCategory::InputFormat,
            _ => ErrorCategory::Precondition,
        }
    }
}
