//! Simulation of a four-wheel active suspension that keeps a rover chassis
//! level.
//!
//! - [`kinematics`]: bell crank and actuator-extension / chassis-height geometry
//! - [`attitude`]: IMU count conversion and per-axis Kalman attitude fusion
//! - [`terrain`], [`plant`]: ground truth rover on a heightfield with sensor models
//! - [`controller`]: roll-first leveling state machine
//! - [`power`]: power budget audit and runtime estimate
//! - [`sim`]: scenario config, validation and the closed-loop runner
//! - [`imu_csv`]: CSV formats for raw IMU streams and filtered output

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod controller;
pub mod imu_csv;
pub mod kinematics;
pub mod plant;
pub mod power;
pub mod sim;
pub mod terrain;

pub use attitude::{Attitude, AttitudeConvention, ImuCalibration, ImuSample, KalmanState};
pub use controller::{ControllerConfig, ControllerState, Phase};
pub use kinematics::{LeverArms, LinkAngle, SuspensionGeometry};
pub use plant::{ActuatorState, ChassisLayout, RoverState};
pub use sim::{run_scenario, validate_scenario, Scenario, TelemetryRecord};
pub use terrain::Terrain;
