use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use suspension_core::attitude::{
    estimate_attitude, gyro_rate, kalman_predict, kalman_update, min_eigenvalue, FilterParams, ImuCalibration,
    ImuSample, KalmanState,
};

fn noisy_stream(seed: u64, n: usize) -> Vec<ImuSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| ImuSample {
            t: k as f64 * 0.01,
            acc: [rng.gen_range(440.0..490.0), rng.gen_range(440.0..490.0), rng.gen_range(540.0..570.0)],
            gyro: [rng.gen_range(500.0..524.0), rng.gen_range(500.0..524.0), 512.0],
        })
        .collect()
}

proptest! {
    #[test]
    fn covariance_stays_symmetric_psd(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Matrix2::new(rng.gen_range(0.0..1e-2), 0.0, 0.0, rng.gen_range(0.0..1e-3));
        let mut s = KalmanState::new(Vector2::zeros(), Matrix2::identity() * rng.gen_range(1e-6..10.0), q, rng.gen_range(1e-4..1.0)).unwrap();
        for _ in 0..300 {
            s = kalman_predict(&s, rng.gen_range(-2.0..2.0), rng.gen_range(1e-3..0.1)).unwrap();
            prop_assert!(min_eigenvalue(&s.p) >= -1e-12);
            prop_assert_eq!(s.p[(0, 1)], s.p[(1, 0)]);
            s = kalman_update(&s, rng.gen_range(-1.0..1.0)).unwrap();
            prop_assert!(min_eigenvalue(&s.p) >= -1e-12);
            prop_assert_eq!(s.p[(0, 1)], s.p[(1, 0)]);
        }
    }

    #[test]
    fn trace_non_increasing_without_process_noise(angle in -1.0..1.0f64, p0 in 1e-3..5.0f64, r in 1e-3..1.0f64, dt in 1e-3..0.05f64) {
        let mut s = KalmanState::new(Vector2::zeros(), Matrix2::identity() * p0, Matrix2::zeros(), r).unwrap();
        let initial = s.p.trace();
        for _ in 0..500 {
            s = kalman_predict(&s, 0.0, dt).unwrap();
            let before = s.p.trace();
            s = kalman_update(&s, angle).unwrap();
            let after = s.p.trace();
            prop_assert!(after <= before, "update raised trace from {before} to {after}");
        }
        prop_assert!(s.p.trace() < initial);
    }

    #[test]
    fn gyro_rate_is_affine(c in 0.0..1023.0f64, delta in -200.0..200.0f64, zero in 400.0..600.0f64) {
        let cal = ImuCalibration::default();
        let step = gyro_rate(c + delta, zero, &cal) - gyro_rate(c, zero, &cal);
        prop_assert!((step - delta / cal.gyro_sensitivity).abs() <= 1e-12 * (1.0 + step.abs()));
    }

    #[test]
    fn estimation_is_deterministic(seed in any::<u64>()) {
        let stream = noisy_stream(seed, 200);
        let cal = ImuCalibration::default();
        let params = FilterParams::default();
        let a = estimate_attitude(&stream, &cal, &params).unwrap();
        let b = estimate_attitude(&stream, &cal, &params).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.attitude.pitch.to_bits(), y.attitude.pitch.to_bits());
            prop_assert_eq!(x.attitude.roll.to_bits(), y.attitude.roll.to_bits());
        }
    }
}
