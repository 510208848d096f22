//! Property tests for the warp, the spatial average, and the container
//! round trip.

use proptest::prelude::*;

use thermolock::io::{read_ths1, write_ths1};
use thermolock::{build_warp, spatial_average_3x3, Pixel, RPeakSeries, TRr, ThermalSequence};

/// Strictly increasing peak times with plausible-ish spacing.
fn peak_times() -> impl Strategy<Value = Vec<f64>> {
    (2_usize..20, 0.0_f64..10.0).prop_flat_map(|(intervals, start)| {
        proptest::collection::vec(0.3_f64..2.0, intervals).prop_map(move |rr| {
            let mut times = vec![start];
            for r in rr {
                times.push(times.last().unwrap() + r);
            }
            times
        })
    })
}

proptest! {
    #[test]
    fn warp_is_strictly_monotone_and_invertible(times in peak_times(), fractions in proptest::collection::vec(0.0_f64..1.0, 50)) {
        let peaks = RPeakSeries::new(times.clone()).unwrap();
        let warp = build_warp(&peaks, TRr::Auto).unwrap();
        let (start, end) = warp.domain();

        let mut points: Vec<f64> = fractions.iter().map(|f| start + f * (end - start)).collect();
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();

        let mut previous: Option<f64> = None;
        for &t in &points {
            let w = warp.warp_time(t).unwrap();
            if let Some(p) = previous {
                prop_assert!(w > p, "warp not strictly increasing at t={t}");
            }
            previous = Some(w);
            let round = warp.unwarp_time(w).unwrap();
            prop_assert!((round - t).abs() < 1e-9, "round trip {t} -> {round}");
        }

        for (k, &p) in times.iter().enumerate() {
            let w = warp.warp_time(p).unwrap();
            prop_assert!((w - k as f64 * warp.t_rr()).abs() < 1e-9);
        }
    }

    #[test]
    fn spatial_average_is_linear(
        a in proptest::collection::vec(-5.0_f64..5.0, 2 * 5 * 5),
        b in proptest::collection::vec(-5.0_f64..5.0, 2 * 5 * 5),
    ) {
        let times = vec![0.0, 0.1];
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let seq_a = ThermalSequence::new(5, 5, times.clone(), a).unwrap();
        let seq_b = ThermalSequence::new(5, 5, times.clone(), b).unwrap();
        let seq_sum = ThermalSequence::new(5, 5, times, sum).unwrap();
        for pixel in [Pixel::new(1, 1), Pixel::new(2, 3), Pixel::new(3, 1)] {
            let avg_a = spatial_average_3x3(&seq_a, pixel).unwrap();
            let avg_b = spatial_average_3x3(&seq_b, pixel).unwrap();
            let avg_sum = spatial_average_3x3(&seq_sum, pixel).unwrap();
            for k in 0..2 {
                prop_assert!((avg_sum.values[k] - (avg_a.values[k] + avg_b.values[k])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ths1_round_trip_preserves_bytes(
        width in 3_usize..8,
        height in 3_usize..8,
        frames in 1_usize..5,
        seed in any::<u32>(),
    ) {
        // Pseudo-random but reproducible payload from the seed.
        let mut state = seed as u64 | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f32) / (u32::MAX as f32)
        };
        let timestamps: Vec<f64> = (0..frames).map(|k| k as f64 * 0.05).collect();
        let data: Vec<f32> = (0..frames * width * height).map(|_| 300.0 + next()).collect();
        let seq = ThermalSequence::new(width, height, timestamps, data).unwrap();

        let mut first = Vec::new();
        write_ths1(&seq, &mut first).unwrap();
        let reread = read_ths1(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_ths1(&reread, &mut second).unwrap();
        prop_assert_eq!(first, second);
        prop_assert_eq!(reread, seq);
    }
}
