//! Quasi-static ground-truth rover: four actuated corners on a heightfield,
//! chassis attitude from corner heights and synthetic sensor readings.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{Attitude, ImuCalibration, ImuSample, X, Y, Z};
use crate::kinematics::{self, KinematicsError, SuspensionGeometry};
use crate::terrain::Terrain;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid chassis layout: {0}")]
    Layout(String),
    #[error("invalid actuator: {0}")]
    Actuator(String),
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("invalid motion script: {0}")]
    Motion(String),
}

pub type Result<T> = std::result::Result<T, PlantError>;

/// Wheel corners in telemetry order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    FrontLeft = 0,
    RearLeft = 1,
    RearRight = 2,
    FrontRight = 3,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::FrontLeft,
        Corner::RearLeft,
        Corner::RearRight,
        Corner::FrontRight,
    ];

    pub fn is_left(self) -> bool {
        matches!(self, Corner::FrontLeft | Corner::RearLeft)
    }

    pub fn is_front(self) -> bool {
        matches!(self, Corner::FrontLeft | Corner::FrontRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChassisLayout {
    /// Front-rear wheel spacing.
    pub wheelbase_m: f64,
    /// Left-right wheel spacing.
    pub track_m: f64,
}

impl Default for ChassisLayout {
    fn default() -> Self {
        Self {
            wheelbase_m: 0.5,
            track_m: 0.4,
        }
    }
}

impl ChassisLayout {
    pub fn new(wheelbase_m: f64, track_m: f64) -> Result<Self> {
        let layout = Self {
            wheelbase_m,
            track_m,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase_m > 0.0 && self.wheelbase_m.is_finite()) {
            return Err(PlantError::Layout(format!("wheelbase must be positive, got {}", self.wheelbase_m)));
        }
        if !(self.track_m > 0.0 && self.track_m.is_finite()) {
            return Err(PlantError::Layout(format!("track must be positive, got {}", self.track_m)));
        }
        Ok(())
    }

    /// Corner position in the chassis frame (x forward, y left).
    pub fn offset(&self, corner: Corner) -> (f64, f64) {
        let dx = 0.5 * self.wheelbase_m;
        let dy = 0.5 * self.track_m;
        match corner {
            Corner::FrontLeft => (dx, dy),
            Corner::RearLeft => (-dx, dy),
            Corner::RearRight => (-dx, -dy),
            Corner::FrontRight => (dx, -dy),
        }
    }
}

/// Position and heading of the chassis centre in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn corner_xy(&self, layout: &ChassisLayout, corner: Corner) -> (f64, f64) {
        let (dx, dy) = layout.offset(corner);
        let (s, c) = self.heading.sin_cos();
        (self.x + c * dx - s * dy, self.y + s * dx + c * dy)
    }
}

/// Chassis attitude from the four corner heights (W1..W4 order).
///
/// Side and end pair averages; for a rectangular layout this is the
/// least-squares plane through the corners.
pub fn chassis_attitude_from_heights(heights: [f64; 4], layout: &ChassisLayout) -> Attitude {
    let [fl, rl, rr, fr] = heights;
    let left = 0.5 * (fl + rl);
    let right = 0.5 * (fr + rr);
    let front = 0.5 * (fl + fr);
    let rear = 0.5 * (rl + rr);
    Attitude::zero_level(
        ((front - rear) / layout.wheelbase_m).atan(),
        ((left - right) / layout.track_m).atan(),
    )
}

/// Chassis height above datum at one corner for actuator extension `b`.
pub fn corner_height(
    terrain: &Terrain,
    pose: &Pose,
    layout: &ChassisLayout,
    corner: Corner,
    b: f64,
    geom: &SuspensionGeometry,
) -> Result<f64> {
    let (x, y) = pose.corner_xy(layout, corner);
    let h_prime = kinematics::height_for_extension(geom, b)?;
    Ok(terrain.height(x, y) + geom.wheel_radius() + h_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorConfig {
    pub no_load_speed_mps: f64,
    pub max_load_n: f64,
    pub load_n: [f64; 4],
}

impl Default for ActuatorConfig {
    /// Placeholder load/speed figures for a 4 inch stroke actuator.
    fn default() -> Self {
        Self {
            no_load_speed_mps: 0.02,
            max_load_n: 400.0,
            load_n: [100.0; 4],
        }
    }
}

/// One linear actuator with its built-in potentiometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorState {
    pub extension: f64,
    pub target: f64,
    pub no_load_speed: f64,
    pub max_load: f64,
    pub load: f64,
    pub stroke: f64,
    /// Ideal potentiometer reading, `extension / stroke`.
    pub pot_reading: f64,
}

impl ActuatorState {
    pub fn new(extension: f64, stroke: f64, no_load_speed: f64, max_load: f64, load: f64) -> Result<Self> {
        if !(stroke > 0.0) || !(no_load_speed >= 0.0) || !(max_load > 0.0) || !(load >= 0.0) {
            return Err(PlantError::Actuator(format!(
                "stroke {stroke}, speed {no_load_speed}, max load {max_load}, load {load}"
            )));
        }
        if !(0.0..=stroke).contains(&extension) {
            return Err(PlantError::Actuator(format!(
                "extension {extension} m outside [0, {stroke}] m"
            )));
        }
        Ok(Self {
            extension,
            target: extension,
            no_load_speed,
            max_load,
            load,
            stroke,
            pot_reading: extension / stroke,
        })
    }

    /// Travel speed after linear load derating.
    pub fn speed(&self) -> f64 {
        self.no_load_speed * (1.0 - self.load / self.max_load).max(0.0)
    }
}

/// Moves the extension toward the target at the derated speed, never past the
/// target and never outside `[0, stroke]`.
pub fn step_actuator(state: &ActuatorState, dt: f64) -> Result<ActuatorState> {
    if !(dt > 0.0) {
        return Err(PlantError::NonPositiveStep(dt));
    }
    let max_step = state.speed() * dt;
    let goal = state.target.clamp(0.0, state.stroke);
    let gap = goal - state.extension;
    let extension = if gap.abs() <= max_step {
        goal
    } else {
        (state.extension + max_step.copysign(gap)).clamp(0.0, state.stroke)
    };
    Ok(ActuatorState {
        extension,
        pot_reading: extension / state.stroke,
        ..*state
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub x_m: f64,
    pub y_m: f64,
    pub speed_mps: f64,
}

/// Scripted chassis motion: straight segments between waypoints, then rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionScript {
    pub start_m: [f64; 2],
    /// Heading while no segment has been driven.
    pub heading_deg: f64,
    pub waypoints: Vec<Waypoint>,
}

impl Default for MotionScript {
    fn default() -> Self {
        Self {
            start_m: [0.0, 0.0],
            heading_deg: 0.0,
            waypoints: Vec::new(),
        }
    }
}

impl MotionScript {
    pub fn validate(&self) -> Result<()> {
        if self.start_m.iter().chain([&self.heading_deg]).any(|v| !v.is_finite()) {
            return Err(PlantError::Motion("start and heading must be finite".into()));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !(w.x_m.is_finite() && w.y_m.is_finite()) {
                return Err(PlantError::Motion(format!("waypoint {i} is not finite")));
            }
            if !(w.speed_mps > 0.0 && w.speed_mps.is_finite()) {
                return Err(PlantError::Motion(format!(
                    "waypoint {i} speed must be positive, got {}",
                    w.speed_mps
                )));
            }
        }
        Ok(())
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        let [mut x, mut y] = self.start_m;
        let mut heading = self.heading_deg.to_radians();
        let mut remaining = t.max(0.0);
        for w in &self.waypoints {
            let (dx, dy) = (w.x_m - x, w.y_m - y);
            let len = dx.hypot(dy);
            if len == 0.0 {
                continue;
            }
            heading = dy.atan2(dx);
            let duration = len / w.speed_mps;
            if remaining < duration {
                let f = remaining / duration;
                return Pose {
                    x: x + f * dx,
                    y: y + f * dy,
                    heading,
                };
            }
            remaining -= duration;
            x = w.x_m;
            y = w.y_m;
        }
        Pose { x, y, heading }
    }

    /// Time at which the last waypoint is reached.
    pub fn end_time(&self) -> f64 {
        let [mut x, mut y] = self.start_m;
        let mut t = 0.0;
        for w in &self.waypoints {
            t += (w.x_m - x).hypot(w.y_m - y) / w.speed_mps;
            x = w.x_m;
            y = w.y_m;
        }
        t
    }

    /// Poses along the script no further apart than `spacing_m`.
    pub fn sample_poses(&self, spacing_m: f64) -> Vec<Pose> {
        let end = self.end_time();
        let mut poses = vec![self.pose_at(0.0)];
        if end > 0.0 {
            let slowest = self
                .waypoints
                .iter()
                .map(|w| w.speed_mps)
                .fold(f64::INFINITY, f64::min);
            let dt = spacing_m / slowest;
            let n = (end / dt).ceil() as usize;
            poses.extend((1..=n).map(|i| self.pose_at((i as f64 * dt).min(end))));
        }
        poses
    }
}

/// Gaussian sensor noise levels and constant gyro bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorNoise {
    pub acc_std_counts: f64,
    pub gyro_std_counts: f64,
    pub gyro_bias_counts: [f64; 3],
    pub pot_std: f64,
    pub clearance_std_m: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            acc_std_counts: 2.0,
            gyro_std_counts: 2.0,
            gyro_bias_counts: [0.0; 3],
            pot_std: 0.002,
            clearance_std_m: 0.002,
        }
    }
}

impl SensorNoise {
    pub fn none() -> Self {
        Self {
            acc_std_counts: 0.0,
            gyro_std_counts: 0.0,
            gyro_bias_counts: [0.0; 3],
            pot_std: 0.0,
            clearance_std_m: 0.0,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [
            ("acc_std_counts", self.acc_std_counts),
            ("gyro_std_counts", self.gyro_std_counts),
            ("pot_std", self.pot_std),
            ("clearance_std_m", self.clearance_std_m),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.gyro_bias_counts.iter().any(|b| !b.is_finite()) {
            return Err("gyro_bias_counts must be finite".into());
        }
        Ok(())
    }
}

/// Ground truth of the rover at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RoverState {
    pub t: f64,
    pub pose: Pose,
    pub actuators: [ActuatorState; 4],
    pub corner_heights: [f64; 4],
    /// Zero-level convention.
    pub attitude: Attitude,
    /// `(pitch rate, roll rate)` in rad/s over the last step.
    pub attitude_rate: (f64, f64),
    pub clearance: f64,
}

/// Everything the on-board electronics read in one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub imu: ImuSample,
    pub pots: [f64; 4],
    pub clearance: f64,
}

/// Synthesizes sensor readings consistent with the rover's true state.
///
/// The accelerometer sees gravity tilted so that the Y/Z and X/Z `atan2`
/// angles equal the true pitch and roll; the X and Y gyros see roll and pitch
/// rates plus bias. Counts are clamped to the ADC range.
pub fn sense(
    rover: &RoverState,
    cal: &ImuCalibration,
    noise: &SensorNoise,
    rng: &mut impl Rng,
) -> SensorFrame {
    let mut gauss = || -> f64 { rng.sample(StandardNormal) };
    let full = cal.adc_full_scale;

    let (tp, tr) = (rover.attitude.pitch.tan(), rover.attitude.roll.tan());
    let gz = 1.0 / (1.0 + tp * tp + tr * tr).sqrt();
    let gravity = [gz * tr, gz * tp, gz];
    let zero = cal.acc_zero_counts();
    let mut acc = [0.0; 3];
    for (axis, g) in gravity.iter().enumerate() {
        acc[axis] = (zero + g * cal.acc_counts_per_g + noise.acc_std_counts * gauss()).clamp(0.0, full);
    }

    let (pitch_rate, roll_rate) = rover.attitude_rate;
    let mut rates = [0.0; 3];
    rates[X] = roll_rate.to_degrees();
    rates[Y] = pitch_rate.to_degrees();
    rates[Z] = 0.0;
    let mut gyro = [0.0; 3];
    for axis in 0..3 {
        gyro[axis] = (cal.gyro_zero[axis]
            + cal.gyro_sensitivity * rates[axis]
            + noise.gyro_bias_counts[axis]
            + noise.gyro_std_counts * gauss())
        .clamp(0.0, full);
    }

    let mut pots = [0.0; 4];
    for (pot, act) in pots.iter_mut().zip(&rover.actuators) {
        *pot = (act.pot_reading + noise.pot_std * gauss()).clamp(0.0, 1.0);
    }
    let clearance = rover.clearance + noise.clearance_std_m * gauss();

    SensorFrame {
        imu: ImuSample {
            t: rover.t,
            acc,
            gyro,
        },
        pots,
        clearance,
    }
}

/// The simulated rover and its environment.
#[derive(Debug, Clone)]
pub struct Plant {
    terrain: Terrain,
    layout: ChassisLayout,
    geometry: [SuspensionGeometry; 4],
    script: MotionScript,
    noise: SensorNoise,
    cal: ImuCalibration,
    rng: ChaCha8Rng,
    state: RoverState,
}

impl Plant {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        terrain: Terrain,
        layout: ChassisLayout,
        geometry: [SuspensionGeometry; 4],
        actuator: &ActuatorConfig,
        initial_h_prime: [f64; 4],
        script: MotionScript,
        cal: ImuCalibration,
        noise: SensorNoise,
        seed: u64,
    ) -> Result<Self> {
        layout.validate()?;
        script.validate()?;
        let mut actuators = Vec::with_capacity(4);
        for i in 0..4 {
            let geom = &geometry[i];
            let (h_lo, h_hi) = geom.height_range();
            if !(h_lo..=h_hi).contains(&initial_h_prime[i]) {
                return Err(PlantError::Actuator(format!(
                    "initial height {} m of corner {} outside operating range [{h_lo}, {h_hi}] m",
                    initial_h_prime[i],
                    i + 1
                )));
            }
            let (b_lo, b_hi) = geom.extension_range();
            let b = kinematics::extension_for_height(geom, initial_h_prime[i])?.clamp(b_lo, b_hi);
            actuators.push(ActuatorState::new(
                b,
                geom.stroke(),
                actuator.no_load_speed_mps,
                actuator.max_load_n,
                actuator.load_n[i],
            )?);
        }
        let actuators: [ActuatorState; 4] = actuators.try_into().expect("four actuators");
        let pose = script.pose_at(0.0);
        let mut plant = Self {
            terrain,
            layout,
            geometry,
            script,
            noise,
            cal,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: RoverState {
                t: 0.0,
                pose,
                actuators,
                corner_heights: [0.0; 4],
                attitude: Attitude::level(),
                attitude_rate: (0.0, 0.0),
                clearance: 0.0,
            },
        };
        plant.refresh_geometry()?;
        Ok(plant)
    }

    pub fn state(&self) -> &RoverState {
        &self.state
    }

    pub fn layout(&self) -> &ChassisLayout {
        &self.layout
    }

    pub fn geometry(&self) -> &[SuspensionGeometry; 4] {
        &self.geometry
    }

    pub fn terrain(&self) -> &Terrain {
        &self.terrain
    }

    pub fn sense(&mut self) -> SensorFrame {
        sense(&self.state, &self.cal, &self.noise, &mut self.rng)
    }

    /// Sets actuator targets; they are clamped to each linkage's extension range.
    pub fn command(&mut self, targets: [f64; 4]) {
        for (i, act) in self.state.actuators.iter_mut().enumerate() {
            let (b_lo, b_hi) = self.geometry[i].extension_range();
            act.target = targets[i].clamp(b_lo, b_hi);
        }
    }

    /// Advances actuators and scripted motion by `dt`, then recomputes the
    /// chassis pose from geometry.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let before = self.state.attitude;
        for act in self.state.actuators.iter_mut() {
            *act = step_actuator(act, dt)?;
        }
        self.state.t += dt;
        self.state.pose = self.script.pose_at(self.state.t);
        self.refresh_geometry()?;
        let after = self.state.attitude;
        self.state.attitude_rate = ((after.pitch - before.pitch) / dt, (after.roll - before.roll) / dt);
        Ok(())
    }

    fn refresh_geometry(&mut self) -> Result<()> {
        let mut heights = [0.0; 4];
        for corner in Corner::ALL {
            let i = corner as usize;
            let (b_lo, b_hi) = self.geometry[i].extension_range();
            let b = self.state.actuators[i].extension.clamp(b_lo, b_hi);
            heights[i] = corner_height(
                &self.terrain,
                &self.state.pose,
                &self.layout,
                corner,
                b,
                &self.geometry[i],
            )?;
        }
        self.state.corner_heights = heights;
        self.state.attitude = chassis_attitude_from_heights(heights, &self.layout);
        let centre = heights.iter().sum::<f64>() / 4.0;
        self.state.clearance = centre - self.terrain.height(self.state.pose.x, self.state.pose.y);
        Ok(())
    }

    /// Current chassis height above each wheel centre.
    pub fn heights_above_wheels(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for i in 0..4 {
            let (b_lo, b_hi) = self.geometry[i].extension_range();
            let b = self.state.actuators[i].extension.clamp(b_lo, b_hi);
            out[i] = kinematics::height_for_extension(&self.geometry[i], b)?;
        }
        Ok(out)
    }
}

/// Ground slope (rad) felt by the chassis along and across its heading at a pose.
pub fn ground_slopes(terrain: &Terrain, pose: &Pose, layout: &ChassisLayout) -> (f64, f64) {
    let mut ground = [0.0; 4];
    for corner in Corner::ALL {
        let (x, y) = pose.corner_xy(layout, corner);
        ground[corner as usize] = terrain.height(x, y);
    }
    let att = chassis_attitude_from_heights(ground, layout);
    debug_assert!(att.pitch.abs() < FRAC_PI_2);
    (att.pitch, att.roll)
}
