//! IMU count conversion and per-axis Kalman attitude fusion.
//!
//! Each axis runs an independent two-state filter over `[angle, gyro_bias]`
//! driven by the gyro rate and corrected by the accelerometer tilt angle.

use std::f64::consts::PI;

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("sample time {t} s precedes previous sample at {prev} s")]
    TimeReversed { t: f64, prev: f64 },
    #[error("{axis} attitude is indeterminate (zero accelerometer vector in its plane)")]
    Indeterminate { axis: &'static str },
    #[error("innovation covariance {0} is not positive")]
    Degenerate(f64),
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, EstimationError>;

/// Axis indices into [`ImuSample`] channels.
pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImuCalibration {
    /// Gyro output at zero rate, ADC counts per axis.
    pub gyro_zero: [f64; 3],
    /// Counts per deg/s.
    pub gyro_sensitivity: f64,
    pub acc_zero_g_voltage: f64,
    pub adc_ref_voltage: f64,
    pub adc_full_scale: f64,
    /// Only used to synthesize samples; tilt angles are scale-free.
    pub acc_counts_per_g: f64,
}

impl Default for ImuCalibration {
    fn default() -> Self {
        Self {
            gyro_zero: [512.0; 3],
            gyro_sensitivity: 14.375,
            acc_zero_g_voltage: 1.5,
            adc_ref_voltage: 3.3,
            adc_full_scale: 1023.0,
            acc_counts_per_g: 93.0,
        }
    }
}

impl ImuCalibration {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EstimationError::InvalidCalibration(msg));
        if !(self.gyro_sensitivity > 0.0 && self.gyro_sensitivity.is_finite()) {
            return bad(format!("gyro_sensitivity must be positive, got {}", self.gyro_sensitivity));
        }
        if !(self.adc_ref_voltage > 0.0 && self.adc_ref_voltage.is_finite()) {
            return bad(format!("adc_ref_voltage must be positive, got {}", self.adc_ref_voltage));
        }
        if !(self.adc_full_scale > 0.0 && self.adc_full_scale.is_finite()) {
            return bad(format!("adc_full_scale must be positive, got {}", self.adc_full_scale));
        }
        if !(self.acc_counts_per_g > 0.0 && self.acc_counts_per_g.is_finite()) {
            return bad(format!("acc_counts_per_g must be positive, got {}", self.acc_counts_per_g));
        }
        if !self.acc_zero_g_voltage.is_finite() || self.gyro_zero.iter().any(|z| !z.is_finite()) {
            return bad("zero offsets must be finite".into());
        }
        Ok(())
    }

    /// Accelerometer 0 g level in counts.
    pub fn acc_zero_counts(&self) -> f64 {
        self.acc_zero_g_voltage / self.adc_ref_voltage * self.adc_full_scale
    }
}

/// One raw IMU reading in ADC counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub acc: [f64; 3],
    pub gyro: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeConvention {
    /// Direct `atan2 + pi` output: level reads `(pi, pi)`.
    RawPiLevel,
    /// Level reads `(0, 0)`.
    ZeroLevel,
}

/// Pitch and roll in radians. Positive pitch is front-high, positive roll is left-high.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attitude {
    pub pitch: f64,
    pub roll: f64,
    pub convention: AttitudeConvention,
}

impl Attitude {
    pub fn zero_level(pitch: f64, roll: f64) -> Self {
        Self {
            pitch,
            roll,
            convention: AttitudeConvention::ZeroLevel,
        }
    }

    pub fn raw(pitch: f64, roll: f64) -> Self {
        Self {
            pitch,
            roll,
            convention: AttitudeConvention::RawPiLevel,
        }
    }

    pub fn level() -> Self {
        Self::zero_level(0.0, 0.0)
    }

    pub fn to_zero_level(self) -> Self {
        match self.convention {
            AttitudeConvention::ZeroLevel => self,
            AttitudeConvention::RawPiLevel => Self::zero_level(self.pitch - PI, self.roll - PI),
        }
    }

    pub fn to_raw(self) -> Self {
        match self.convention {
            AttitudeConvention::RawPiLevel => self,
            AttitudeConvention::ZeroLevel => Self::raw(self.pitch + PI, self.roll + PI),
        }
    }
}

/// Gyro rate in deg/s from ADC counts.
pub fn gyro_rate(counts: f64, zero: f64, cal: &ImuCalibration) -> f64 {
    (counts - zero) / cal.gyro_sensitivity
}

/// Advances an angle in radians by a rate in deg/s over `dt` seconds.
pub fn integrate_gyro(prev_angle: f64, rate_deg_s: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(EstimationError::NonPositiveStep(dt));
    }
    Ok(prev_angle + (rate_deg_s * dt).to_radians())
}

/// Tilt from the accelerometer, in the raw (`level = pi`) convention.
///
/// Counts are offset by the 0 g level and fed to `atan2` unscaled.
pub fn accel_attitude(sample: &ImuSample, cal: &ImuCalibration) -> Result<Attitude> {
    let zero = cal.acc_zero_counts();
    let [x, y, z] = sample.acc.map(|c| c - zero);
    if y == 0.0 && z == 0.0 {
        return Err(EstimationError::Indeterminate { axis: "pitch" });
    }
    if x == 0.0 && z == 0.0 {
        return Err(EstimationError::Indeterminate { axis: "roll" });
    }
    Ok(Attitude::raw(y.atan2(z) + PI, x.atan2(z) + PI))
}

/// Observation row: the accelerometer measures the angle state only.
fn observation() -> RowVector2<f64> {
    RowVector2::new(1.0, 0.0)
}

fn symmetrize(p: Matrix2<f64>) -> Matrix2<f64> {
    (p + p.transpose()) * 0.5
}

/// Filter state of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    /// `[angle (rad), gyro bias (rad/s)]`
    pub x_hat: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub q: Matrix2<f64>,
    pub r: f64,
}

impl KalmanState {
    pub fn new(x_hat: Vector2<f64>, p: Matrix2<f64>, q: Matrix2<f64>, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(EstimationError::InvalidParams(format!("R must be positive, got {r}")));
        }
        if min_eigenvalue(&q) < 0.0 {
            return Err(EstimationError::InvalidParams("Q must be positive semidefinite".into()));
        }
        if min_eigenvalue(&p) < 0.0 {
            return Err(EstimationError::InvalidParams("P must be positive semidefinite".into()));
        }
        Ok(Self { x_hat, p, q, r })
    }

    pub fn angle(&self) -> f64 {
        self.x_hat[0]
    }

    pub fn bias(&self) -> f64 {
        self.x_hat[1]
    }
}

/// Smaller eigenvalue of the symmetric part of a 2x2 matrix.
pub fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mean - radius
}

/// Time update with the gyro rate (rad/s) as control input.
pub fn kalman_predict(state: &KalmanState, gyro_rate: f64, dt: f64) -> Result<KalmanState> {
    if !(dt > 0.0) {
        return Err(EstimationError::NonPositiveStep(dt));
    }
    let f = Matrix2::new(1.0, -dt, 0.0, 1.0);
    let b = Vector2::new(dt, 0.0);
    Ok(KalmanState {
        x_hat: f * state.x_hat + b * gyro_rate,
        p: symmetrize(f * state.p * f.transpose() + state.q),
        ..*state
    })
}

/// Measurement update with an accelerometer angle `z` (rad).
pub fn kalman_update(state: &KalmanState, z: f64) -> Result<KalmanState> {
    let h = observation();
    let innovation = z - (h * state.x_hat)[0];
    let s = (h * state.p * h.transpose())[0] + state.r;
    if !(s > 0.0) {
        return Err(EstimationError::Degenerate(s));
    }
    let k = state.p * h.transpose() / s;
    Ok(KalmanState {
        x_hat: state.x_hat + k * innovation,
        p: symmetrize((Matrix2::identity() - k * h) * state.p),
        ..*state
    })
}

/// Noise parameters shared by both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    /// Angle process noise per second of prediction (rad^2/s).
    pub q_angle: f64,
    /// Bias process noise per second of prediction ((rad/s)^2/s).
    pub q_bias: f64,
    /// Accelerometer angle variance (rad^2).
    pub r_measurement: f64,
    pub p0_angle: f64,
    pub p0_bias: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            q_angle: 1e-3,
            q_bias: 3e-5,
            r_measurement: 0.03,
            p0_angle: 0.03,
            p0_bias: 1e-3,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q_angle", self.q_angle),
            ("q_bias", self.q_bias),
            ("p0_angle", self.p0_angle),
            ("p0_bias", self.p0_bias),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(EstimationError::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.r_measurement > 0.0 && self.r_measurement.is_finite()) {
            return Err(EstimationError::InvalidParams(format!(
                "r_measurement must be positive, got {}",
                self.r_measurement
            )));
        }
        Ok(())
    }

    fn initial_state(&self, angle: f64) -> Result<KalmanState> {
        KalmanState::new(
            Vector2::new(angle, 0.0),
            Matrix2::new(self.p0_angle, 0.0, 0.0, self.p0_bias),
            Matrix2::zeros(),
            self.r_measurement,
        )
    }

    fn process_noise(&self, dt: f64) -> Matrix2<f64> {
        Matrix2::new(self.q_angle * dt, 0.0, 0.0, self.q_bias * dt)
    }
}

/// Filtered output for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeEstimate {
    pub t: f64,
    /// Zero-level convention.
    pub attitude: Attitude,
    pub pitch_bias: f64,
    pub roll_bias: f64,
}

/// Streaming two-axis estimator. Pitch fuses the Y gyro with the Y/Z tilt,
/// roll the X gyro with the X/Z tilt.
#[derive(Debug, Clone)]
pub struct AttitudeEstimator {
    cal: ImuCalibration,
    params: FilterParams,
    axes: Option<(KalmanState, KalmanState)>,
    last_t: f64,
}

impl AttitudeEstimator {
    pub fn new(cal: ImuCalibration, params: FilterParams) -> Result<Self> {
        cal.validate()?;
        params.validate()?;
        Ok(Self {
            cal,
            params,
            axes: None,
            last_t: f64::NEG_INFINITY,
        })
    }

    pub fn pitch_state(&self) -> Option<&KalmanState> {
        self.axes.as_ref().map(|(p, _)| p)
    }

    pub fn roll_state(&self) -> Option<&KalmanState> {
        self.axes.as_ref().map(|(_, r)| r)
    }

    pub fn step(&mut self, sample: &ImuSample) -> Result<AttitudeEstimate> {
        if sample.t < self.last_t {
            return Err(EstimationError::TimeReversed {
                t: sample.t,
                prev: self.last_t,
            });
        }
        let measured = accel_attitude(sample, &self.cal)?.to_zero_level();
        let (pitch, roll) = match self.axes {
            None => (
                self.params.initial_state(measured.pitch)?,
                self.params.initial_state(measured.roll)?,
            ),
            Some((pitch, roll)) => {
                let dt = sample.t - self.last_t;
                let (pitch, roll) = if dt > 0.0 {
                    let q = self.params.process_noise(dt);
                    let pitch_rate = self.rate_rad_s(sample, Y);
                    let roll_rate = self.rate_rad_s(sample, X);
                    (
                        kalman_predict(&KalmanState { q, ..pitch }, pitch_rate, dt)?,
                        kalman_predict(&KalmanState { q, ..roll }, roll_rate, dt)?,
                    )
                } else {
                    (pitch, roll)
                };
                (
                    kalman_update(&pitch, measured.pitch)?,
                    kalman_update(&roll, measured.roll)?,
                )
            }
        };
        self.axes = Some((pitch, roll));
        self.last_t = sample.t;
        Ok(AttitudeEstimate {
            t: sample.t,
            attitude: Attitude::zero_level(pitch.angle(), roll.angle()),
            pitch_bias: pitch.bias(),
            roll_bias: roll.bias(),
        })
    }

    fn rate_rad_s(&self, sample: &ImuSample, axis: usize) -> f64 {
        gyro_rate(sample.gyro[axis], self.cal.gyro_zero[axis], &self.cal).to_radians()
    }
}

/// Runs the estimator over a whole time-ordered stream.
pub fn estimate_attitude(
    stream: &[ImuSample],
    cal: &ImuCalibration,
    params: &FilterParams,
) -> Result<Vec<AttitudeEstimate>> {
    let mut est = AttitudeEstimator::new(*cal, *params)?;
    stream.iter().map(|s| est.step(s)).collect()
}
