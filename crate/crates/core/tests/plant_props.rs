use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use suspension_core::attitude::{AttitudeEstimator, FilterParams, ImuCalibration};
use suspension_core::kinematics::{GeometryConfig, SuspensionGeometry};
use suspension_core::plant::{
    chassis_attitude_from_heights, step_actuator, ActuatorConfig, ActuatorState, ChassisLayout, Corner, MotionScript,
    Plant, SensorNoise, Waypoint,
};
use suspension_core::terrain::Terrain;

fn default_geometry() -> SuspensionGeometry {
    SuspensionGeometry::from_config(&GeometryConfig::default()).unwrap()
}

fn ramp_plant(grade: f64, azimuth: f64, noise: SensorNoise, script: MotionScript, seed: u64) -> Plant {
    Plant::new(
        Terrain::Ramp {
            grade_deg: grade,
            azimuth_deg: azimuth,
        },
        ChassisLayout::default(),
        [default_geometry(); 4],
        &ActuatorConfig::default(),
        [0.1; 4],
        script,
        ImuCalibration::default(),
        noise,
        seed,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn static_pose_estimate_converges(grade in 0.0..20.0f64, azimuth in -180.0..180.0f64, heading in -180.0..180.0f64) {
        let script = MotionScript { heading_deg: heading, ..MotionScript::default() };
        let mut plant = ramp_plant(grade, azimuth, SensorNoise::none(), script, 0);
        let mut est = AttitudeEstimator::new(ImuCalibration::default(), FilterParams::default()).unwrap();
        let mut last = None;
        for _ in 0..500 {
            last = Some(est.step(&plant.sense().imu).unwrap());
            plant.step(0.01).unwrap();
        }
        let e = last.unwrap();
        let truth = plant.state().attitude;
        prop_assert!((e.attitude.pitch - truth.pitch).abs() < 1e-6);
        prop_assert!((e.attitude.roll - truth.roll).abs() < 1e-6);
    }

    #[test]
    fn actuator_never_overshoots(
        start in 0.0..0.1016f64,
        target in -0.05..0.15f64,
        load in 0.0..400.0f64,
        dt in 1e-4..2.0f64,
    ) {
        let mut a = ActuatorState::new(start, 0.1016, 0.02, 400.0, load).unwrap();
        a.target = target;
        let goal = target.clamp(0.0, 0.1016);
        for _ in 0..50 {
            let next = step_actuator(&a, dt).unwrap();
            prop_assert!((0.0..=0.1016).contains(&next.extension));
            prop_assert!((goal - next.extension) * (goal - a.extension) >= 0.0, "crossed the target");
            prop_assert!((goal - next.extension).abs() <= (goal - a.extension).abs());
            a = next;
        }
    }

    #[test]
    fn attitude_ignores_common_offset(h in prop::array::uniform4(-1.0..1.0f64), k in -10.0..10.0f64) {
        let layout = ChassisLayout::default();
        let a = chassis_attitude_from_heights(h, &layout);
        let b = chassis_attitude_from_heights(h.map(|v| v + k), &layout);
        prop_assert!((a.pitch - b.pitch).abs() < 1e-12 && (a.roll - b.roll).abs() < 1e-12);
    }

    #[test]
    fn attitude_matches_least_squares_plane(h in prop::array::uniform4(-0.5..0.5f64), w in 0.1..2.0f64, t in 0.1..2.0f64) {
        let layout = ChassisLayout::new(w, t).unwrap();
        let mut ata = Matrix3::zeros();
        let mut atz = Vector3::zeros();
        for corner in Corner::ALL {
            let (x, y) = layout.offset(corner);
            let row = Vector3::new(1.0, x, y);
            ata += row * row.transpose();
            atz += row * h[corner as usize];
        }
        let coef = ata.lu().solve(&atz).unwrap();
        let att = chassis_attitude_from_heights(h, &layout);
        prop_assert!((att.pitch - coef[1].atan()).abs() < 1e-12);
        prop_assert!((att.roll - coef[2].atan()).abs() < 1e-12);
    }
}

#[test]
fn same_seed_gives_same_trajectory() {
    let script = MotionScript {
        waypoints: vec![Waypoint {
            x_m: 1.0,
            y_m: 0.5,
            speed_mps: 0.3,
        }],
        ..MotionScript::default()
    };
    let run = || {
        let mut plant = ramp_plant(8.0, 45.0, SensorNoise::default(), script.clone(), 11);
        let mut states = Vec::new();
        for k in 0..400 {
            let frame = plant.sense();
            plant.command([0.02 + 1e-4 * k as f64, 0.05, 0.08, frame.pots[3] * 0.1016]);
            plant.step(0.01).unwrap();
            states.push((plant.state().clone(), frame));
        }
        states
    };
    assert_eq!(run(), run());
}
