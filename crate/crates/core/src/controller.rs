//! Roll-first chassis leveling state machine with potentiometer tracking.
//!
//! Each tick resolves at most one of: roll, pitch, clearance. Roll beats pitch
//! whenever both exceed their deadbands; clearance is only touched when the
//! chassis is level. Targets are chassis heights above the wheel centres,
//! converted to actuator extensions through the linkage geometry.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{Attitude, AttitudeConvention};
use crate::kinematics::{self, ExtensionTable, KinematicsError, SuspensionGeometry};
use crate::plant::{ChassisLayout, Corner};

/// Raw targets that move by more than this when clamped count as saturated.
pub const SATURATION_EPS_M: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid controller config: {0}")]
    Config(String),
    #[error("attitude must be in the zero-level convention")]
    Convention,
    #[error("potentiometer reading {0} outside [0, 1]")]
    PotRange(f64),
}

pub type Result<T> = std::result::Result<T, ControllerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Both pairs move by half the correction in opposite directions.
    #[default]
    Symmetric,
    /// Only the high pair moves down by the full correction.
    SinglePair,
}

/// Serialized controller settings; angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSettings {
    pub roll_deadband_deg: f64,
    pub pitch_deadband_deg: f64,
    pub clearance_setpoint_m: f64,
    pub clearance_deadband_m: f64,
    pub inner_gain_per_s: f64,
    pub pair_mode: PairMode,
    /// Use a precomputed height-to-extension table with this many samples.
    pub lookup_table_samples: Option<usize>,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            roll_deadband_deg: 1.0,
            pitch_deadband_deg: 1.0,
            clearance_setpoint_m: 0.2,
            clearance_deadband_m: 0.005,
            inner_gain_per_s: 5.0,
            pair_mode: PairMode::Symmetric,
            lookup_table_samples: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub roll_deadband: f64,
    pub pitch_deadband: f64,
    pub clearance_setpoint: f64,
    pub clearance_deadband: f64,
    pub inner_gain: f64,
    pub tick_dt: f64,
    pub geometry: [SuspensionGeometry; 4],
    pub layout: ChassisLayout,
    pub pair_mode: PairMode,
    tables: Option<Vec<ExtensionTable>>,
}

impl ControllerConfig {
    pub fn new(
        settings: &ControllerSettings,
        geometry: [SuspensionGeometry; 4],
        layout: ChassisLayout,
        tick_dt: f64,
    ) -> Result<Self> {
        let positive = [
            ("roll_deadband_deg", settings.roll_deadband_deg),
            ("pitch_deadband_deg", settings.pitch_deadband_deg),
            ("clearance_deadband_m", settings.clearance_deadband_m),
            ("inner_gain_per_s", settings.inner_gain_per_s),
            ("tick_dt_s", tick_dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControllerError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !settings.clearance_setpoint_m.is_finite() {
            return Err(ControllerError::Config("clearance_setpoint_m must be finite".into()));
        }
        layout
            .validate()
            .map_err(|e| ControllerError::Config(e.to_string()))?;
        let tables = settings
            .lookup_table_samples
            .map(|n| geometry.iter().map(|g| ExtensionTable::new(g, n)).collect())
            .transpose()?;
        Ok(Self {
            roll_deadband: settings.roll_deadband_deg.to_radians(),
            pitch_deadband: settings.pitch_deadband_deg.to_radians(),
            clearance_setpoint: settings.clearance_setpoint_m,
            clearance_deadband: settings.clearance_deadband_m,
            inner_gain: settings.inner_gain_per_s,
            tick_dt,
            geometry,
            layout,
            pair_mode: settings.pair_mode,
            tables,
        })
    }

    fn extension_for(&self, corner: usize, h_prime: f64) -> Result<f64> {
        match &self.tables {
            Some(tables) => Ok(tables[corner].extension(h_prime)),
            None => Ok(kinematics::extension_for_height(&self.geometry[corner], h_prime)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Idle,
    CorrectRoll,
    CorrectPitch,
    CorrectClearance,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "IDLE",
            Phase::CorrectRoll => "CORRECT_ROLL",
            Phase::CorrectPitch => "CORRECT_PITCH",
            Phase::CorrectClearance => "CORRECT_CLEARANCE",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "IDLE" => Ok(Phase::Idle),
            "CORRECT_ROLL" => Ok(Phase::CorrectRoll),
            "CORRECT_PITCH" => Ok(Phase::CorrectPitch),
            "CORRECT_CLEARANCE" => Ok(Phase::CorrectClearance),
            other => Err(format!("unknown phase {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub phase: Phase,
    /// Target chassis height above each wheel centre.
    pub target_h_prime: [f64; 4],
    pub saturated: [bool; 4],
    /// Heights read back from the potentiometers on the latest tick.
    pub measured_h_prime: [f64; 4],
}

impl ControllerState {
    /// Idle state holding the current heights.
    pub fn holding(measured_h_prime: [f64; 4]) -> Self {
        Self {
            phase: Phase::Idle,
            target_h_prime: measured_h_prime,
            saturated: [false; 4],
            measured_h_prime,
        }
    }

    /// Builds the holding state from potentiometer readings.
    pub fn from_pots(pots: [f64; 4], cfg: &ControllerConfig) -> Result<Self> {
        Ok(Self::holding(measured_heights(pots, cfg)?))
    }
}

fn measured_heights(pots: [f64; 4], cfg: &ControllerConfig) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for i in 0..4 {
        let b = pot_extension(pots[i], &cfg.geometry[i])?;
        out[i] = kinematics::height_for_extension(&cfg.geometry[i], b)?;
    }
    Ok(out)
}

fn pot_extension(pot: f64, geom: &SuspensionGeometry) -> Result<f64> {
    if !(0.0..=1.0).contains(&pot) {
        return Err(ControllerError::PotRange(pot));
    }
    let (b_lo, b_hi) = geom.extension_range();
    Ok((pot * geom.stroke()).clamp(b_lo, b_hi))
}

/// Height offsets that remove `delta` of side-to-side (or end-to-end) height
/// difference. `first` selects the pair that is currently high.
fn pair_offsets(delta: f64, first: impl Fn(Corner) -> bool, mode: PairMode) -> [f64; 4] {
    let mut out = [0.0; 4];
    for corner in Corner::ALL {
        let high = first(corner);
        out[corner as usize] = match mode {
            PairMode::Symmetric if high => -0.5 * delta,
            PairMode::Symmetric => 0.5 * delta,
            // Lower whichever pair is actually high.
            PairMode::SinglePair if (delta >= 0.0) == high => -delta.abs(),
            PairMode::SinglePair => 0.0,
        };
    }
    out
}

/// Chooses this tick's correction and the resulting height targets.
pub fn plan_correction(
    att: &Attitude,
    clearance: f64,
    cfg: &ControllerConfig,
    state: &ControllerState,
) -> Result<ControllerState> {
    if att.convention != AttitudeConvention::ZeroLevel {
        return Err(ControllerError::Convention);
    }
    let (phase, offsets) = if att.roll.abs() > cfg.roll_deadband {
        let delta = cfg.layout.track_m * att.roll.tan();
        (Phase::CorrectRoll, pair_offsets(delta, Corner::is_left, cfg.pair_mode))
    } else if att.pitch.abs() > cfg.pitch_deadband {
        let delta = cfg.layout.wheelbase_m * att.pitch.tan();
        (Phase::CorrectPitch, pair_offsets(delta, Corner::is_front, cfg.pair_mode))
    } else if (clearance - cfg.clearance_setpoint).abs() > cfg.clearance_deadband {
        (Phase::CorrectClearance, [cfg.clearance_setpoint - clearance; 4])
    } else {
        return Ok(ControllerState {
            phase: Phase::Idle,
            saturated: [false; 4],
            ..*state
        });
    };

    let mut next = ControllerState {
        phase,
        ..*state
    };
    for i in 0..4 {
        let raw = state.measured_h_prime[i] + offsets[i];
        let clamped = cfg.geometry[i].clamp_height(raw);
        next.target_h_prime[i] = clamped;
        next.saturated[i] = (raw - clamped).abs() > SATURATION_EPS_M;
    }
    Ok(next)
}

/// Proportional extension commands toward the current height targets.
pub fn track_targets(
    state: &ControllerState,
    pots: [f64; 4],
    cfg: &ControllerConfig,
    dt: f64,
) -> Result<[f64; 4]> {
    let mut commands = [0.0; 4];
    for i in 0..4 {
        let geom = &cfg.geometry[i];
        let (h_lo, h_hi) = geom.height_range();
        let target_h = state.target_h_prime[i];
        debug_assert!(
            (h_lo..=h_hi).contains(&target_h),
            "target {target_h} outside [{h_lo}, {h_hi}]"
        );
        let target_b = cfg.extension_for(i, geom.clamp_height(target_h))?;
        let current_b = pot_extension(pots[i], geom)?;
        let command = current_b + cfg.inner_gain * (target_b - current_b) * dt;
        let (b_lo, b_hi) = geom.extension_range();
        commands[i] = command.clamp(b_lo, b_hi);
    }
    Ok(commands)
}

/// One controller tick: read back heights, plan, then track.
pub fn control_tick(
    att: &Attitude,
    clearance: f64,
    pots: [f64; 4],
    cfg: &ControllerConfig,
    state: &ControllerState,
) -> Result<(ControllerState, [f64; 4])> {
    let measured = ControllerState {
        measured_h_prime: measured_heights(pots, cfg)?,
        ..*state
    };
    let next = plan_correction(att, clearance, cfg, &measured)?;
    let commands = track_targets(&next, pots, cfg, cfg.tick_dt)?;
    Ok((next, commands))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::GeometryConfig;
    use approx::assert_relative_eq;

    fn cfg() -> ControllerConfig {
        let g = SuspensionGeometry::from_config(&GeometryConfig::default()).unwrap();
        ControllerConfig::new(&ControllerSettings::default(), [g; 4], ChassisLayout::default(), 0.01).unwrap()
    }

    fn mid_state(cfg: &ControllerConfig) -> ControllerState {
        let (lo, hi) = cfg.geometry[0].height_range();
        ControllerState::holding([0.5 * (lo + hi); 4])
    }

    fn pots_for(cfg: &ControllerConfig, h: [f64; 4]) -> [f64; 4] {
        let mut pots = [0.0; 4];
        for i in 0..4 {
            let g = &cfg.geometry[i];
            pots[i] = kinematics::extension_for_height(g, h[i]).unwrap() / g.stroke();
        }
        pots
    }

    #[test]
    fn level_at_setpoint_is_idle() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let next = plan_correction(&Attitude::level(), cfg.clearance_setpoint, &cfg, &state).unwrap();
        assert_eq!(next.phase, Phase::Idle);
        assert_eq!(next.target_h_prime, state.target_h_prime);
    }

    #[test]
    fn roll_beats_larger_pitch() {
        let cfg = cfg();
        let att = Attitude::zero_level(0.2, 0.1);
        let next = plan_correction(&att, cfg.clearance_setpoint, &cfg, &mid_state(&cfg)).unwrap();
        assert_eq!(next.phase, Phase::CorrectRoll);
    }

    #[test]
    fn roll_correction_lowers_left_raises_right() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let roll = 2f64.to_radians();
        let next = plan_correction(&Attitude::zero_level(0.0, roll), 0.0, &cfg, &state).unwrap();
        let half = 0.5 * cfg.layout.track_m * roll.tan();
        let m = state.measured_h_prime[0];
        assert_relative_eq!(next.target_h_prime[Corner::FrontLeft as usize], m - half, epsilon = 1e-15);
        assert_relative_eq!(next.target_h_prime[Corner::RearLeft as usize], m - half, epsilon = 1e-15);
        assert_relative_eq!(next.target_h_prime[Corner::RearRight as usize], m + half, epsilon = 1e-15);
        assert_relative_eq!(next.target_h_prime[Corner::FrontRight as usize], m + half, epsilon = 1e-15);
        assert_eq!(next.saturated, [false; 4]);
    }

    #[test]
    fn pitch_correction_moves_front_and_rear() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let pitch = -3f64.to_radians();
        let next = plan_correction(&Attitude::zero_level(pitch, 0.0), 0.0, &cfg, &state).unwrap();
        assert_eq!(next.phase, Phase::CorrectPitch);
        let half = 0.5 * cfg.layout.wheelbase_m * pitch.tan();
        let m = state.measured_h_prime[0];
        // Nose low: front rises.
        assert_relative_eq!(next.target_h_prime[Corner::FrontLeft as usize], m - half, epsilon = 1e-15);
        assert!(next.target_h_prime[Corner::FrontLeft as usize] > m);
        assert_relative_eq!(next.target_h_prime[Corner::RearRight as usize], m + half, epsilon = 1e-15);
    }

    #[test]
    fn clearance_shifts_all_corners() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let next = plan_correction(&Attitude::level(), cfg.clearance_setpoint - 0.02, &cfg, &state).unwrap();
        assert_eq!(next.phase, Phase::CorrectClearance);
        for i in 0..4 {
            assert_relative_eq!(next.target_h_prime[i], state.measured_h_prime[i] + 0.02, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_pair_mode_lowers_high_side_only() {
        let settings = ControllerSettings {
            pair_mode: PairMode::SinglePair,
            ..ControllerSettings::default()
        };
        let base = cfg();
        let cfg = ControllerConfig::new(&settings, base.geometry, base.layout, 0.01).unwrap();
        let state = mid_state(&cfg);
        let roll = -2f64.to_radians();
        let next = plan_correction(&Attitude::zero_level(0.0, roll), cfg.clearance_setpoint, &cfg, &state).unwrap();
        let full = cfg.layout.track_m * roll.tan().abs();
        let m = state.measured_h_prime[0];
        assert_eq!(next.target_h_prime[Corner::FrontLeft as usize], m);
        assert_eq!(next.target_h_prime[Corner::RearLeft as usize], m);
        assert_relative_eq!(next.target_h_prime[Corner::RearRight as usize], m - full, epsilon = 1e-15);
        assert_relative_eq!(next.target_h_prime[Corner::FrontRight as usize], m - full, epsilon = 1e-15);
    }

    #[test]
    fn large_roll_saturates() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let next = plan_correction(&Attitude::zero_level(0.0, 0.6), 0.0, &cfg, &state).unwrap();
        let (lo, hi) = cfg.geometry[0].height_range();
        assert_eq!(next.saturated, [true; 4]);
        assert_eq!(next.target_h_prime[Corner::FrontLeft as usize], lo);
        assert_eq!(next.target_h_prime[Corner::FrontRight as usize], hi);
    }

    #[test]
    fn raw_attitude_is_rejected() {
        let cfg = cfg();
        let att = Attitude::level().to_raw();
        assert!(matches!(
            plan_correction(&att, 0.0, &cfg, &mid_state(&cfg)),
            Err(ControllerError::Convention)
        ));
    }

    #[test]
    fn tracking_holds_at_target() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let pots = pots_for(&cfg, state.target_h_prime);
        let commands = track_targets(&state, pots, &cfg, 0.01).unwrap();
        for i in 0..4 {
            assert!((commands[i] - pots[i] * cfg.geometry[i].stroke()).abs() < 1e-12);
        }
    }

    #[test]
    fn tracking_is_proportional() {
        let cfg = cfg();
        let g = cfg.geometry[0];
        let current_h = 0.1;
        let current_b = kinematics::extension_for_height(&g, current_h).unwrap();
        let target_b = current_b + 0.02;
        let target_h = kinematics::height_for_extension(&g, target_b).unwrap();
        let state = ControllerState {
            target_h_prime: [target_h; 4],
            ..ControllerState::holding([current_h; 4])
        };
        let pots = [current_b / g.stroke(); 4];
        let commands = track_targets(&state, pots, &cfg, 0.1).unwrap();
        assert_relative_eq!(commands[0] - current_b, 0.01, epsilon = 1e-9);
    }

    #[test]
    fn pot_out_of_range_is_rejected() {
        let cfg = cfg();
        assert!(matches!(
            ControllerState::from_pots([0.5, 0.5, 1.5, 0.5], &cfg),
            Err(ControllerError::PotRange(_))
        ));
    }

    #[test]
    fn zero_inputs_tick_is_noop() {
        let cfg = cfg();
        let state = mid_state(&cfg);
        let pots = pots_for(&cfg, state.target_h_prime);
        let (next, commands) = control_tick(&Attitude::level(), cfg.clearance_setpoint, pots, &cfg, &state).unwrap();
        assert_eq!(next.phase, Phase::Idle);
        for i in 0..4 {
            assert!((commands[i] - pots[i] * cfg.geometry[i].stroke()).abs() < 1e-9);
        }
    }

    #[test]
    fn config_rejects_nonpositive() {
        let base = cfg();
        let settings = ControllerSettings {
            roll_deadband_deg: 0.0,
            ..ControllerSettings::default()
        };
        assert!(ControllerConfig::new(&settings, base.geometry, base.layout, 0.01).is_err());
        assert!(ControllerConfig::new(&ControllerSettings::default(), base.geometry, base.layout, 0.0).is_err());
    }

    #[test]
    fn phase_round_trips_through_text() {
        for p in [Phase::Idle, Phase::CorrectRoll, Phase::CorrectPitch, Phase::CorrectClearance] {
            assert_eq!(p.as_str().parse::<Phase>().unwrap(), p);
        }
    }
}
