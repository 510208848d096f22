//! Cross-module checks: detector against generator ground truth, and the
//! detect -> warp -> lock-in chain on synthetic scenes.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermolock::{
    bin_cycles, build_warp, cardiac_frequency, detect_rpeaks, mean_rr, spatial_average_3x3,
    synchronous_average, synth_dataset, synth_ecg, DetectorConfig, EcgTrace, LockInConfig, Pixel,
    RPeakSeries, SynthConfig, TRr, Waveform,
};

/// One-to-one greedy matching of detections to truth within a tolerance.
fn match_peaks(truth: &[f64], detected: &[f64], tolerance: f64) -> usize {
    let mut used = vec![false; detected.len()];
    let mut matched = 0;
    for &t in truth {
        let mut best: Option<(usize, f64)> = None;
        for (i, &d) in detected.iter().enumerate() {
            if used[i] {
                continue;
            }
            let err = (d - t).abs();
            if err <= tolerance && best.map_or(true, |(_, b)| err < b) {
                best = Some((i, err));
            }
        }
        if let Some((i, _)) = best {
            used[i] = true;
            matched += 1;
        }
    }
    matched
}

fn add_noise_at_snr(ecg: &EcgTrace, snr_db: f64, seed: u64) -> EcgTrace {
    let rms = (ecg.samples().iter().map(|s| s * s).sum::<f64>() / ecg.samples().len() as f64)
        .sqrt();
    let sigma = rms / 10.0_f64.powf(snr_db / 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy: Vec<f64> = ecg
        .samples()
        .iter()
        .map(|s| s + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    EcgTrace::new(ecg.sample_rate(), noisy, ecg.start_time()).unwrap()
}

#[test]
fn clean_synthetic_ecg_is_detected_within_ten_milliseconds() {
    let cfg = SynthConfig {
        duration: 10.0,
        heart_rate: 60.0,
        rr_jitter: 0.0,
        ..SynthConfig::default()
    };
    let (ecg, truth) = synth_ecg(&cfg).unwrap();
    let peaks = detect_rpeaks(&ecg, &DetectorConfig::default()).unwrap();
    assert_eq!(peaks.len(), 10, "found {:?}", peaks.peak_times());
    for (found, expected) in peaks.peak_times().iter().zip(&truth.true_rpeak_times) {
        assert!(
            (found - expected).abs() <= 0.010,
            "peak {found} vs truth {expected}"
        );
    }
}

#[test]
fn noisy_ecg_detection_stays_sensitive_and_precise() {
    let cfg = SynthConfig {
        duration: 30.0,
        heart_rate: 75.0,
        rr_jitter: 0.10,
        seed: 11,
        ..SynthConfig::default()
    };
    let (clean, truth) = synth_ecg(&cfg).unwrap();
    let noisy = add_noise_at_snr(&clean, 10.0, 0xDD);
    let peaks = detect_rpeaks(&noisy, &DetectorConfig::default()).unwrap();
    let matched = match_peaks(&truth.true_rpeak_times, peaks.peak_times(), 0.050);
    let sensitivity = matched as f64 / truth.true_rpeak_times.len() as f64;
    let ppv = matched as f64 / peaks.len() as f64;
    assert!(sensitivity >= 0.95, "sensitivity {sensitivity}");
    assert!(ppv >= 0.95, "ppv {ppv}");
}

#[test]
fn mean_rr_tracks_the_configured_heart_rate() {
    let cfg = SynthConfig {
        duration: 30.0,
        heart_rate: 72.0,
        rr_jitter: 0.05,
        seed: 4,
        ..SynthConfig::default()
    };
    let (ecg, _) = synth_ecg(&cfg).unwrap();
    let peaks = detect_rpeaks(&ecg, &DetectorConfig::default()).unwrap();
    let mean = mean_rr(&peaks).unwrap();
    assert_relative_eq!(mean, 60.0 / 72.0, max_relative = 0.02);
    let f = cardiac_frequency(&peaks).unwrap();
    assert_relative_eq!(f, 1.2, max_relative = 0.02);
}

#[test]
fn detected_peaks_match_ground_truth_across_the_dataset_bundle() {
    let cfg = SynthConfig {
        duration: 20.0,
        width: 8,
        height: 8,
        artery_mask: thermolock::block_mask(3, 3, 2, 2),
        seed: 15,
        ..SynthConfig::default()
    };
    let (ecg, _, truth) = synth_dataset(&cfg).unwrap();
    let peaks = detect_rpeaks(&ecg, &DetectorConfig::default()).unwrap();
    assert_eq!(peaks.len(), truth.true_rpeak_times.len());
    for (found, expected) in peaks.peak_times().iter().zip(&truth.true_rpeak_times) {
        assert!((found - expected).abs() <= 0.010);
    }
}

#[test]
fn noise_free_lockin_recovers_the_waveform_bin_exactly() {
    // No jitter, no noise: every cycle is identical, so each bin mean must
    // equal the waveform value at that bin's sample phase to f32 rounding.
    let cfg = SynthConfig {
        duration: 20.0,
        width: 9,
        height: 9,
        heart_rate: 60.0,
        rr_jitter: 0.0,
        noise_sd: 0.0,
        artery_mask: thermolock::block_mask(3, 3, 3, 3),
        seed: 2,
        ..SynthConfig::default()
    };
    let (ecg, thermal, _) = synth_dataset(&cfg).unwrap();
    let peaks = detect_rpeaks(&ecg, &DetectorConfig::default()).unwrap();
    let warp = build_warp(&peaks, TRr::Auto).unwrap();
    let series = spatial_average_3x3(&thermal, Pixel::new(4, 4)).unwrap();
    let lockin_cfg = LockInConfig::default();
    let binned = bin_cycles(&series, &warp, 0.0, &lockin_cfg).unwrap();
    let profile = synchronous_average(&binned).unwrap();

    for b in 0..profile.mean.len() {
        if profile.is_bin_empty(b) {
            continue;
        }
        assert!(profile.sd[b] < 5.0e-5, "bin {b} spread {}", profile.sd[b]);
        let swing = (profile.mean[b] - cfg.baseline).abs();
        assert!(swing <= cfg.signal_amplitude + 5.0e-5);
    }
    let hi = profile.mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = profile.mean.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_relative_eq!((hi - lo) / 2.0, cfg.signal_amplitude, max_relative = 0.02);
}

#[test]
fn triangular_scene_recovers_triangle_extremes() {
    let cfg = SynthConfig {
        duration: 20.0,
        width: 9,
        height: 9,
        heart_rate: 60.0,
        rr_jitter: 0.0,
        noise_sd: 0.0,
        waveform: Waveform::Triangular,
        artery_mask: thermolock::block_mask(3, 3, 3, 3),
        seed: 2,
        ..SynthConfig::default()
    };
    let (_, thermal, truth) = synth_dataset(&cfg).unwrap();
    let peaks = RPeakSeries::new(truth.true_rpeak_times.clone()).unwrap();
    let warp = build_warp(&peaks, TRr::Auto).unwrap();
    let series = spatial_average_3x3(&thermal, Pixel::new(4, 4)).unwrap();
    let binned = bin_cycles(&series, &warp, 0.0, &LockInConfig::default()).unwrap();
    let profile = synchronous_average(&binned).unwrap();
    let hi = profile.mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = profile.mean.iter().cloned().fold(f64::INFINITY, f64::min);
    // The triangle's crest sits at the R-peak (bin 0) and its trough at
    // half a cycle.
    assert_relative_eq!(hi, cfg.baseline + cfg.signal_amplitude, epsilon = 1e-4);
    assert_relative_eq!(lo, cfg.baseline - cfg.signal_amplitude, epsilon = 1e-4);
}

#[test]
fn lockin_on_signal_plus_noise_matches_decomposed_parts() {
    // Eq-style fidelity: lock-in is affine, so the profile of s + n must
    // equal the sum of the separate profiles.
    let cfg = SynthConfig {
        duration: 20.0,
        width: 9,
        height: 9,
        seed: 31,
        artery_mask: thermolock::block_mask(3, 3, 3, 3),
        ..SynthConfig::default()
    };
    let (_, truth) = synth_ecg(&cfg).unwrap();
    let combined = thermolock::synth_thermal(&cfg, &truth).unwrap();
    let (signal, noise) = thermolock::synth_thermal_parts(&cfg, &truth).unwrap();
    let peaks = RPeakSeries::new(truth.true_rpeak_times.clone()).unwrap();
    let warp = build_warp(&peaks, TRr::Auto).unwrap();
    let lockin_cfg = LockInConfig::default();

    let p = Pixel::new(4, 4);
    let profile_combined = synchronous_average(
        &bin_cycles(&spatial_average_3x3(&combined, p).unwrap(), &warp, 0.0, &lockin_cfg).unwrap(),
    )
    .unwrap();
    let profile_signal = synchronous_average(
        &bin_cycles(&spatial_average_3x3(&signal, p).unwrap(), &warp, 0.0, &lockin_cfg).unwrap(),
    )
    .unwrap();
    let profile_noise = synchronous_average(
        &bin_cycles(&spatial_average_3x3(&noise, p).unwrap(), &warp, 0.0, &lockin_cfg).unwrap(),
    )
    .unwrap();

    // Storing the sum rounds each sample to f32, so the profiles agree to
    // the storage quantum (~2e-5 K at 307 K), not to f64 epsilon.
    for b in 0..profile_combined.mean.len() {
        if profile_combined.is_bin_empty(b) {
            continue;
        }
        assert_relative_eq!(
            profile_combined.mean[b],
            profile_signal.mean[b] + profile_noise.mean[b],
            epsilon = 1e-5
        );
    }
}
