//! File formats: the THS1 thermal container, ECG CSV, ground-truth JSON,
//! and the derived CSV reports.
//!
//! THS1 and the ECG CSV are the interchange surface and round-trip
//! bit-exactly (THS1) or value-exactly (CSV, via shortest round-trip
//! float text). Derived report CSVs are formatted at six significant
//! digits for stable golden files and stay parseable by the readers here.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::ecg::{EcgTrace, RPeakSeries};
use crate::error::{Error, Result};
use crate::lockin::{LockInMap, WindowResult};
use crate::motion::MotionScore;
use crate::spectral::SpectralMap;
use crate::synth::GroundTruth;
use crate::thermal::ThermalSequence;

pub const THS1_MAGIC: [u8; 4] = *b"THS1";
pub const THS1_VERSION: u32 = 1;

/// Relative tolerance for the uniform-sampling check on ECG CSV rows.
const UNIFORM_STEP_RTOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// THS1 container
// ---------------------------------------------------------------------------

/// Write a sequence as THS1: a 24-byte header (magic, version, width,
/// height, frame count, reserved zero), then `f64` timestamps and `f32`
/// row-major frames, all little-endian.
pub fn write_ths1<W: Write>(seq: &ThermalSequence<f32>, mut w: W) -> Result<()> {
    w.write_all(&THS1_MAGIC)?;
    w.write_all(&THS1_VERSION.to_le_bytes())?;
    w.write_all(&(seq.width() as u32).to_le_bytes())?;
    w.write_all(&(seq.height() as u32).to_le_bytes())?;
    w.write_all(&(seq.frame_count() as u32).to_le_bytes())?;
    w.write_all(&0_u32.to_le_bytes())?;
    for &t in seq.timestamps() {
        w.write_all(&t.to_le_bytes())?;
    }
    for &v in seq.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a THS1 payload, rejecting bad magic, unsupported versions, size
/// mismatches, non-monotonic timestamps, and non-finite temperatures.
pub fn read_ths1<R: Read>(mut r: R) -> Result<ThermalSequence<f32>> {
    let mut header = [0_u8; 24];
    let mut filled = 0;
    while filled < header.len() {
        let n = r.read(&mut header[filled..])?;
        if n == 0 {
            return Err(Error::TruncatedPayload { expected: 24, found: filled as u64 });
        }
        filled += n;
    }
    let magic: [u8; 4] = header[0..4].try_into().expect("4-byte slice");
    if magic != THS1_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4-byte slice"));
    if version != THS1_VERSION {
        return Err(Error::UnsupportedVersion { found: version, supported: THS1_VERSION });
    }
    let width = u32::from_le_bytes(header[8..12].try_into().expect("4-byte slice")) as usize;
    let height = u32::from_le_bytes(header[12..16].try_into().expect("4-byte slice")) as usize;
    let frames = u32::from_le_bytes(header[16..20].try_into().expect("4-byte slice")) as usize;

    let expected = frames as u64 * 8 + frames as u64 * width as u64 * height as u64 * 4;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if (payload.len() as u64) < expected {
        return Err(Error::TruncatedPayload { expected, found: payload.len() as u64 });
    }
    if payload.len() as u64 > expected {
        return Err(Error::OversizedPayload { expected, found: payload.len() as u64 });
    }

    let mut timestamps = Vec::with_capacity(frames);
    for k in 0..frames {
        let bytes: [u8; 8] = payload[k * 8..k * 8 + 8].try_into().expect("8-byte slice");
        timestamps.push(f64::from_le_bytes(bytes));
    }
    let mut data = Vec::with_capacity(frames * width * height);
    let base = frames * 8;
    for k in 0..frames * width * height {
        let bytes: [u8; 4] =
            payload[base + k * 4..base + k * 4 + 4].try_into().expect("4-byte slice");
        data.push(f32::from_le_bytes(bytes));
    }
    ThermalSequence::new(width, height, timestamps, data)
}

pub fn write_ths1_file<P: AsRef<Path>>(seq: &ThermalSequence<f32>, path: P) -> Result<()> {
    let mut bytes = Vec::new();
    write_ths1(seq, &mut bytes)?;
    write_atomic(path, &bytes)
}

pub fn read_ths1_file<P: AsRef<Path>>(path: P) -> Result<ThermalSequence<f32>> {
    read_ths1(fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// ECG CSV
// ---------------------------------------------------------------------------

pub const ECG_CSV_HEADER: &str = "time_s,voltage_mv";

/// Write the ECG as `time_s,voltage_mv` rows. Values use shortest
/// round-trip float text, so reading the file back reproduces them
/// exactly.
pub fn write_ecg_csv<W: Write>(trace: &EcgTrace, mut w: W) -> Result<()> {
    writeln!(w, "{ECG_CSV_HEADER}")?;
    for (i, &v) in trace.samples().iter().enumerate() {
        writeln!(w, "{},{}", trace.time_of(i), v)?;
    }
    Ok(())
}

/// Parse an ECG CSV, rejecting ragged rows and non-uniform sample
/// spacing (beyond 1e-9 relative).
pub fn read_ecg_csv<R: Read>(mut r: R) -> Result<EcgTrace> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != ECG_CSV_HEADER {
        return Err(Error::CsvHeader {
            expected: ECG_CSV_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    let mut times = Vec::new();
    let mut volts = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields = split_row(line, 2, i + 2)?;
        times.push(parse_f64(fields[0], i + 2)?);
        volts.push(parse_f64(fields[1], i + 2)?);
    }
    if times.len() < 2 {
        return Err(Error::TooFewSamples { got: times.len() });
    }
    let nominal = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(nominal > 0.0) {
        return Err(Error::NonUniformSampling { index: 1, step: nominal, nominal });
    }
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - nominal).abs() > UNIFORM_STEP_RTOL * nominal.abs() {
            return Err(Error::NonUniformSampling { index: i + 1, step, nominal });
        }
    }
    EcgTrace::new(1.0 / nominal, volts, times[0])
}

pub fn write_ecg_csv_file<P: AsRef<Path>>(trace: &EcgTrace, path: P) -> Result<()> {
    let mut bytes = Vec::new();
    write_ecg_csv(trace, &mut bytes)?;
    write_atomic(path, &bytes)
}

pub fn read_ecg_csv_file<P: AsRef<Path>>(path: P) -> Result<EcgTrace> {
    read_ecg_csv(fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// Ground truth JSON
// ---------------------------------------------------------------------------

pub fn write_ground_truth<W: Write>(truth: &GroundTruth, mut w: W) -> Result<()> {
    let json = serde_json::to_string_pretty(truth)?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_ground_truth<R: Read>(mut r: R) -> Result<GroundTruth> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_ground_truth_file<P: AsRef<Path>>(truth: &GroundTruth, path: P) -> Result<()> {
    let mut bytes = Vec::new();
    write_ground_truth(truth, &mut bytes)?;
    write_atomic(path, &bytes)
}

pub fn read_ground_truth_file<P: AsRef<Path>>(path: P) -> Result<GroundTruth> {
    read_ground_truth(fs::File::open(path)?)
}

// ---------------------------------------------------------------------------
// Derived report CSVs
// ---------------------------------------------------------------------------

/// Six-significant-digit float text for the derived CSVs: stable across
/// platforms and still precise well past the mK scale.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:e}");
    let exp: i32 = sci[sci.find('e').expect("exponent marker") + 1..]
        .parse()
        .expect("valid exponent");
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const RPEAKS_CSV_HEADER: &str = "peak_time_s";

pub fn write_rpeaks_csv<W: Write>(peaks: &RPeakSeries, mut w: W) -> Result<()> {
    writeln!(w, "{RPEAKS_CSV_HEADER}")?;
    for &t in peaks.peak_times() {
        writeln!(w, "{}", fmt_sig6(t))?;
    }
    Ok(())
}

pub fn read_rpeaks_csv<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != RPEAKS_CSV_HEADER {
        return Err(Error::CsvHeader {
            expected: RPEAKS_CSV_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    lines
        .enumerate()
        .map(|(i, line)| parse_f64(split_row(line, 1, i + 2)?[0], i + 2))
        .collect()
}

pub const LOCKIN_CSV_HEADER: &str = "window_start,bin,phase_s,mean_K,sd_K,se_K,count";

/// One row per phase bin per window; empty bins carry `nan` statistics
/// and a zero count.
pub fn write_lockin_csv<W: Write>(windows: &[WindowResult], mut w: W) -> Result<()> {
    writeln!(w, "{LOCKIN_CSV_HEADER}")?;
    for window in windows {
        let p = &window.profile;
        for b in 0..p.mean.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_sig6(window.window_start),
                b,
                fmt_sig6(p.phase_bin_centers[b]),
                fmt_sig6(p.mean[b]),
                fmt_sig6(p.sd[b]),
                fmt_sig6(p.se[b]),
                p.sample_count[b],
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockinCsvRow {
    pub window_start: f64,
    pub bin: usize,
    pub phase_s: f64,
    pub mean_k: f64,
    pub sd_k: f64,
    pub se_k: f64,
    pub count: usize,
}

pub fn read_lockin_csv<R: Read>(mut r: R) -> Result<Vec<LockinCsvRow>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != LOCKIN_CSV_HEADER {
        return Err(Error::CsvHeader {
            expected: LOCKIN_CSV_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f = split_row(line, 7, i + 2)?;
        rows.push(LockinCsvRow {
            window_start: parse_f64(f[0], i + 2)?,
            bin: parse_usize(f[1], i + 2)?,
            phase_s: parse_f64(f[2], i + 2)?,
            mean_k: parse_f64(f[3], i + 2)?,
            sd_k: parse_f64(f[4], i + 2)?,
            se_k: parse_f64(f[5], i + 2)?,
            count: parse_usize(f[6], i + 2)?,
        });
    }
    Ok(rows)
}

pub const MOTION_CSV_HEADER: &str = "frame,score,shift_r,shift_c";

pub fn write_motion_csv<W: Write>(scores: &[MotionScore], mut w: W) -> Result<()> {
    writeln!(w, "{MOTION_CSV_HEADER}")?;
    for (k, s) in scores.iter().enumerate() {
        writeln!(w, "{},{},{},{}", k, fmt_sig6(s.score), s.shift.0, s.shift.1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionCsvRow {
    pub frame: usize,
    pub score: f64,
    pub shift_r: i64,
    pub shift_c: i64,
}

pub fn read_motion_csv<R: Read>(mut r: R) -> Result<Vec<MotionCsvRow>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != MOTION_CSV_HEADER {
        return Err(Error::CsvHeader {
            expected: MOTION_CSV_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f = split_row(line, 4, i + 2)?;
        rows.push(MotionCsvRow {
            frame: parse_usize(f[0], i + 2)?,
            score: parse_f64(f[1], i + 2)?,
            shift_r: parse_i64(f[2], i + 2)?,
            shift_c: parse_i64(f[3], i + 2)?,
        });
    }
    Ok(rows)
}

pub const ARTERYMAP_CSV_HEADER: &str = "row,col,amplitude_K,phase_rad";

/// Raw spectral map values, one row per interior pixel in source-frame
/// coordinates; invalid pixels carry `nan`.
pub fn write_arterymap_csv<W: Write>(map: &SpectralMap, mut w: W) -> Result<()> {
    writeln!(w, "{ARTERYMAP_CSV_HEADER}")?;
    for idx in 0..map.amplitude.len() {
        let pixel = map.source_pixel(idx);
        writeln!(
            w,
            "{},{},{},{}",
            pixel.row,
            pixel.col,
            fmt_sig6(map.amplitude[idx]),
            fmt_sig6(map.phase[idx]),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapCsvRow {
    pub row: usize,
    pub col: usize,
    pub amplitude_k: f64,
    pub phase_rad: f64,
}

pub fn read_arterymap_csv<R: Read>(mut r: R) -> Result<Vec<MapCsvRow>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != ARTERYMAP_CSV_HEADER {
        return Err(Error::CsvHeader {
            expected: ARTERYMAP_CSV_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f = split_row(line, 4, i + 2)?;
        rows.push(MapCsvRow {
            row: parse_usize(f[0], i + 2)?,
            col: parse_usize(f[1], i + 2)?,
            amplitude_k: parse_f64(f[2], i + 2)?,
            phase_rad: parse_f64(f[3], i + 2)?,
        });
    }
    Ok(rows)
}

pub const LOCKIN_MAP_CSV_HEADER: &str = "window_start,row,col,amplitude_K,phase_rad,se_mean_K";

/// Whole-frame lock-in summary, one row per interior pixel.
pub fn write_lockin_map_csv<W: Write>(map: &LockInMap, mut w: W) -> Result<()> {
    writeln!(w, "{LOCKIN_MAP_CSV_HEADER}")?;
    for idx in 0..map.amplitude.len() {
        let pixel = map.source_pixel(idx);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_sig6(map.window_start),
            pixel.row,
            pixel.col,
            fmt_sig6(map.amplitude[idx]),
            fmt_sig6(map.phase[idx]),
            fmt_sig6(map.se_mean[idx]),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockinMapCsvRow {
    pub window_start: f64,
    pub row: usize,
    pub col: usize,
    pub amplitude_k: f64,
    pub phase_rad: f64,
    pub se_mean_k: f64,
}

pub fn read_lockin_map_csv<R: Read>(mut r: R) -> Result<Vec<LockinMapCsvRow>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != LOCKIN_MAP_CSV_HEADER {
        return Err(Error::CsvHeader {
            expected: LOCKIN_MAP_CSV_HEADER.to_string(),
            got: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f = split_row(line, 6, i + 2)?;
        rows.push(LockinMapCsvRow {
            window_start: parse_f64(f[0], i + 2)?,
            row: parse_usize(f[1], i + 2)?,
            col: parse_usize(f[2], i + 2)?,
            amplitude_k: parse_f64(f[3], i + 2)?,
            phase_rad: parse_f64(f[4], i + 2)?,
            se_mean_k: parse_f64(f[5], i + 2)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

/// Write to a sibling temp file, then rename into place.
pub fn write_atomic<P: AsRef<Path>>(path: P, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn split_row(line: &str, expected: usize, line_no: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(Error::RaggedCsv { line: line_no, expected, got: fields.len() });
    }
    Ok(fields)
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
    field.trim().parse().map_err(|e| Error::CsvParse {
        line: line_no,
        reason: format!("{field:?}: {e}"),
    })
}

fn parse_usize(field: &str, line_no: usize) -> Result<usize> {
    field.trim().parse().map_err(|e| Error::CsvParse {
        line: line_no,
        reason: format!("{field:?}: {e}"),
    })
}

fn parse_i64(field: &str, line_no: usize) -> Result<i64> {
    field.trim().parse().map_err(|e| Error::CsvParse {
        line: line_no,
        reason: format!("{field:?}: {e}"),
    })
}
