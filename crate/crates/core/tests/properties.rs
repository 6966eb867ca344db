//! Property tests over the pure numeric transforms.

use proptest::prelude::*;

use swx_core::dispersion::{normalize_per_frequency, DispersionGrid};
use swx_core::grid::Grid;
use swx_core::metrics::{mape, mssim, SsimParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every normalized frequency column tops out at exactly 1 (or stays all
    /// zero), and all values land in [0, 1].
    #[test]
    fn normalization_invariants(values in proptest::collection::vec(0.0f64..1e12, 5 * 4)) {
        let grid = DispersionGrid {
            vel_count: 5,
            freq_count: 4,
            ..Default::default()
        };
        let raw = Grid::from_vec(5, 4, values);
        let img = normalize_per_frequency(&raw, &grid, "prop").unwrap();
        for k in 0..4 {
            let col: Vec<f64> = (0..5).map(|vi| img.power.get(vi, k)).collect();
            let max = col.iter().copied().fold(0.0f64, f64::max);
            prop_assert!(col.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(max == 1.0 || col.iter().all(|&v| v == 0.0));
        }
    }

    /// mape(alpha * t, t) = 100 |alpha - 1| for positive truths.
    #[test]
    fn mape_scale_behavior(
        alpha in 0.01f64..4.0,
        values in proptest::collection::vec(1.0f64..2000.0, 24)
    ) {
        let t = Grid::from_vec(4, 6, values);
        let p = t.map(|v| alpha * v);
        let m = mape(&p, &t).unwrap();
        prop_assert!((m - 100.0 * (alpha - 1.0).abs()).abs() < 1e-9);
    }

    /// MSSIM is symmetric and every SSIM map value is within [-1, 1].
    #[test]
    fn mssim_symmetry_and_bounds(
        a in proptest::collection::vec(50.0f64..1500.0, 12 * 12),
        b in proptest::collection::vec(50.0f64..1500.0, 12 * 12)
    ) {
        let ga = Grid::from_vec(12, 12, a);
        let gb = Grid::from_vec(12, 12, b);
        let params = SsimParams { dynamic_range: 1450.0, ..Default::default() };
        let (m_ab, map) = mssim(&ga, &gb, &params).unwrap();
        let (m_ba, _) = mssim(&gb, &ga, &params).unwrap();
        prop_assert!((m_ab - m_ba).abs() < 1e-12);
        for &v in map.data() {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
    }

    /// The Ricker wavelet peaks at its delay and never exceeds 1.
    #[test]
    fn ricker_peak_bounds(f0 in 5.0f64..80.0, steps in 100usize..400) {
        let t0 = 1.5 / f0;
        let dt = 3.0 * t0 / steps as f64;
        let w = swx_core::sim::ricker(f0, t0, dt, steps);
        for &v in &w {
            prop_assert!(v <= 1.0 + 1e-12 && v >= -1.0);
        }
        let peak = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(peak > 0.9);
    }
}
