//! Scenario configuration, validation and the closed-loop tick runner.
//!
//! One tick: sense the plant, run the estimator, run the controller, command
//! the actuators, advance the plant.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{AttitudeEstimator, EstimationError, FilterParams, ImuCalibration};
use crate::controller::{self, ControllerConfig, ControllerError, ControllerSettings, ControllerState, Phase};
use crate::kinematics::{GeometryConfig, SuspensionGeometry};
use crate::plant::{self, ActuatorConfig, ChassisLayout, MotionScript, Plant, PlantError, SensorNoise};
use crate::terrain::Terrain;

/// Upper bound on ticks per scenario.
pub const MAX_TICKS: f64 = 1e7;
/// Length of the trailing window used for steady-state statistics.
pub const STEADY_WINDOW_S: f64 = 10.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario is invalid:\n{}", format_findings(.0))]
    Config(Vec<Finding>),
    #[error("failed to parse scenario: {0}")]
    Parse(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("telemetry csv line {line}: {reason}")]
    Telemetry { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| format!("  {f}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Either one linkage for all corners or one per corner (W1..W4).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CornerGeometry {
    Uniform(GeometryConfig),
    PerCorner([GeometryConfig; 4]),
}

impl Default for CornerGeometry {
    fn default() -> Self {
        CornerGeometry::Uniform(GeometryConfig::default())
    }
}

impl CornerGeometry {
    pub fn corners(&self) -> [GeometryConfig; 4] {
        match self {
            CornerGeometry::Uniform(g) => [*g; 4],
            CornerGeometry::PerCorner(gs) => *gs,
        }
    }

    fn path(&self, i: usize) -> String {
        match self {
            CornerGeometry::Uniform(_) => "geometry".into(),
            CornerGeometry::PerCorner(_) => format!("geometry[{i}]"),
        }
    }
}

/// Everything needed to run one closed-loop simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub duration_s: f64,
    pub tick_dt_s: f64,
    pub seed: u64,
    pub terrain: Terrain,
    pub layout: ChassisLayout,
    pub geometry: CornerGeometry,
    pub actuator: ActuatorConfig,
    /// Starting chassis height above every wheel centre.
    pub initial_h_prime_m: f64,
    pub controller: ControllerSettings,
    pub imu: ImuCalibration,
    pub noise: SensorNoise,
    pub filter: FilterParams,
    pub motion: MotionScript,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            duration_s: 10.0,
            tick_dt_s: 0.01,
            seed: 0,
            terrain: Terrain::default(),
            layout: ChassisLayout::default(),
            geometry: CornerGeometry::default(),
            actuator: ActuatorConfig::default(),
            initial_h_prime_m: 0.1,
            controller: ControllerSettings::default(),
            imu: ImuCalibration::default(),
            noise: SensorNoise::none(),
            filter: FilterParams::default(),
            motion: MotionScript::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn ticks(&self) -> usize {
        (self.duration_s / self.tick_dt_s).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One validation result, keyed by the dotted config path it concerns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.path, self.message)
    }
}

fn error(path: impl Into<String>, message: impl Into<String>) -> Finding {
    Finding {
        severity: Severity::Error,
        path: path.into(),
        message: message.into(),
    }
}

fn warning(path: impl Into<String>, message: impl Into<String>) -> Finding {
    Finding {
        severity: Severity::Warning,
        path: path.into(),
        message: message.into(),
    }
}

/// Checks a scenario. Errors block a run; warnings (such as slopes beyond the
/// actuators' correction range) do not.
pub fn validate_scenario(s: &Scenario) -> Vec<Finding> {
    let mut out = Vec::new();

    if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
        out.push(error("duration_s", format!("must be positive, got {}", s.duration_s)));
    }
    if !(s.tick_dt_s > 0.0 && s.tick_dt_s.is_finite()) {
        out.push(error("tick_dt_s", format!("must be positive, got {}", s.tick_dt_s)));
    } else if s.duration_s / s.tick_dt_s > MAX_TICKS {
        out.push(error(
            "tick_dt_s",
            format!("{} ticks exceeds the limit of {MAX_TICKS}", s.duration_s / s.tick_dt_s),
        ));
    }

    out.extend(s.terrain.check("terrain").into_iter().map(|(p, m)| error(p, m)));
    if let Err(e) = s.layout.validate() {
        out.push(error("layout", e.to_string()));
    }

    let distinct = match s.geometry {
        CornerGeometry::Uniform(_) => 1,
        CornerGeometry::PerCorner(_) => 4,
    };
    let mut geometry = Vec::new();
    for (i, cfg) in s.geometry.corners().iter().take(distinct).enumerate() {
        match SuspensionGeometry::from_config(cfg) {
            Ok(g) => geometry.push(g),
            Err(e) => out.push(error(s.geometry.path(i), e.to_string())),
        }
    }

    let act = &s.actuator;
    if !(act.no_load_speed_mps >= 0.0 && act.no_load_speed_mps.is_finite()) {
        out.push(error("actuator.no_load_speed_mps", "must be >= 0"));
    }
    if !(act.max_load_n > 0.0 && act.max_load_n.is_finite()) {
        out.push(error("actuator.max_load_n", "must be positive"));
    }
    for (i, load) in act.load_n.iter().enumerate() {
        if !(*load >= 0.0 && load.is_finite()) {
            out.push(error(format!("actuator.load_n[{i}]"), "must be >= 0"));
        }
    }

    if let Err(e) = s.imu.validate() {
        out.push(error("imu", e.to_string()));
    }
    if let Err(e) = s.noise.validate() {
        out.push(error("noise", e));
    }
    if let Err(e) = s.filter.validate() {
        out.push(error("filter", e.to_string()));
    }
    if let Err(e) = s.motion.validate() {
        out.push(error("motion", e.to_string()));
    }

    let c = &s.controller;
    for (name, v) in [
        ("roll_deadband_deg", c.roll_deadband_deg),
        ("pitch_deadband_deg", c.pitch_deadband_deg),
        ("clearance_deadband_m", c.clearance_deadband_m),
        ("inner_gain_per_s", c.inner_gain_per_s),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            out.push(error(format!("controller.{name}"), format!("must be positive, got {v}")));
        }
    }
    if c.inner_gain_per_s * s.tick_dt_s > 1.0 {
        out.push(warning(
            "controller.inner_gain_per_s",
            "gain x tick exceeds 1; extension commands will overshoot their targets",
        ));
    }
    if let Some(n) = c.lookup_table_samples {
        if n < 2 {
            out.push(error("controller.lookup_table_samples", "needs at least 2 samples"));
        }
    }

    if geometry.is_empty() || out.iter().any(|f| f.severity == Severity::Error) {
        return out;
    }

    let corners = s.geometry.corners();
    for (i, g) in geometry.iter().enumerate() {
        let (h_lo, h_hi) = g.height_range();
        if !(h_lo..=h_hi).contains(&s.initial_h_prime_m) {
            out.push(error(
                "initial_h_prime_m",
                format!(
                    "{} m is outside corner {} operating range [{h_lo:.4}, {h_hi:.4}] m",
                    s.initial_h_prime_m,
                    i + 1
                ),
            ));
        }
        // On level ground the clearance is wheel radius plus h'.
        let needed = c.clearance_setpoint_m - corners[i].wheel_radius_m;
        if !(h_lo..=h_hi).contains(&needed) {
            out.push(error(
                "controller.clearance_setpoint_m",
                format!(
                    "unreachable: needs {needed:.4} m above the wheel centre at {}, \
                     linkage reaches [{h_lo:.4}, {h_hi:.4}] m",
                    s.geometry.path(i)
                ),
            ));
        }
    }

    let range = geometry
        .iter()
        .map(|g| g.height_range().1 - g.height_range().0)
        .fold(f64::INFINITY, f64::min);
    let mut worst: Option<(f64, f64, f64)> = None;
    for pose in s.motion.sample_poses(0.05) {
        for corner in plant::Corner::ALL {
            let (x, y) = pose.corner_xy(&s.layout, corner);
            if !s.terrain.height(x, y).is_finite() {
                out.push(error(
                    "terrain",
                    format!("height is not finite at ({x:.3}, {y:.3})"),
                ));
                return out;
            }
        }
        let (pitch, roll) = plant::ground_slopes(&s.terrain, &pose, &s.layout);
        let needed = s.layout.track_m * roll.tan().abs() + s.layout.wheelbase_m * pitch.tan().abs();
        if worst.is_none_or(|w| needed > w.0) {
            worst = Some((needed, pitch, roll));
        }
    }
    if let Some((needed, pitch, roll)) = worst {
        if needed > range {
            out.push(warning(
                "terrain",
                format!(
                    "slope (pitch {:.2} deg, roll {:.2} deg) needs {needed:.4} m of height correction, \
                     actuators offer {range:.4} m; expect saturation",
                    pitch.to_degrees(),
                    roll.to_degrees()
                ),
            ));
        }
    }
    out
}

/// One row of closed-loop telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub true_pitch: f64,
    pub true_roll: f64,
    pub est_pitch: f64,
    pub est_roll: f64,
    pub clearance: f64,
    pub extension: [f64; 4],
    pub pot: [f64; 4],
    pub phase: Phase,
    pub saturated: [bool; 4],
}

pub const TELEMETRY_HEADER: &str = "t,true_pitch,true_roll,est_pitch,est_roll,clearance,\
b1,b2,b3,b4,pot1,pot2,pot3,pot4,phase,sat1,sat2,sat3,sat4";

/// 17 significant digits, round-trips every f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_telemetry_csv(records: &[TelemetryRecord], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{TELEMETRY_HEADER}")?;
    for r in records {
        let mut fields: Vec<String> = [r.t, r.true_pitch, r.true_roll, r.est_pitch, r.est_roll, r.clearance]
            .into_iter()
            .chain(r.extension)
            .chain(r.pot)
            .map(format_float)
            .collect();
        fields.push(r.phase.to_string());
        fields.extend(r.saturated.iter().map(|&s| if s { "1" } else { "0" }.to_string()));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn read_telemetry_csv(r: impl BufRead) -> Result<Vec<TelemetryRecord>> {
    let mut lines = r.lines();
    let bad = |line: usize, reason: String| SimError::Telemetry { line, reason };
    match lines.next().transpose()? {
        Some(h) if h == TELEMETRY_HEADER => {}
        _ => return Err(bad(1, "missing or unexpected header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 19 {
            return Err(bad(line_no, format!("expected 19 fields, got {}", f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse::<f64>()
                .map_err(|_| bad(line_no, format!("bad number {:?}", f[k])))
        };
        let flag = |k: usize| -> Result<bool> {
            match f[k] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(line_no, format!("bad flag {other:?}"))),
            }
        };
        out.push(TelemetryRecord {
            t: num(0)?,
            true_pitch: num(1)?,
            true_roll: num(2)?,
            est_pitch: num(3)?,
            est_roll: num(4)?,
            clearance: num(5)?,
            extension: [num(6)?, num(7)?, num(8)?, num(9)?],
            pot: [num(10)?, num(11)?, num(12)?, num(13)?],
            phase: f[14].parse().map_err(|e: String| bad(line_no, e))?,
            saturated: [flag(15)?, flag(16)?, flag(17)?, flag(18)?],
        });
    }
    Ok(out)
}

/// Run statistics derived only from the telemetry records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub ticks: usize,
    /// First time after which both true angles stay inside their deadbands.
    pub settle_time_s: Option<f64>,
    pub max_abs_pitch_rad: f64,
    pub max_abs_roll_rad: f64,
    pub max_estimation_error_rad: f64,
    pub steady_window_ticks: usize,
    pub steady_mean_abs_pitch_rad: f64,
    pub steady_mean_abs_roll_rad: f64,
    pub steady_max_abs_pitch_rad: f64,
    pub steady_max_abs_roll_rad: f64,
    pub saturation_ticks: [usize; 4],
    pub phase_ticks: BTreeMap<String, usize>,
}

impl SummaryReport {
    pub fn from_telemetry(
        records: &[TelemetryRecord],
        pitch_deadband: f64,
        roll_deadband: f64,
        tick_dt: f64,
    ) -> Self {
        let inside = |r: &TelemetryRecord| r.true_pitch.abs() < pitch_deadband && r.true_roll.abs() < roll_deadband;
        let settled_from = records.iter().rposition(|r| !inside(r)).map_or(0, |k| k + 1);
        let settle_time_s = records.get(settled_from).map(|r| r.t);

        let max_abs = |f: fn(&TelemetryRecord) -> f64, rs: &[TelemetryRecord]| {
            rs.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
        };
        let mean_abs = |f: fn(&TelemetryRecord) -> f64, rs: &[TelemetryRecord]| {
            if rs.is_empty() {
                0.0
            } else {
                rs.iter().map(|r| f(r).abs()).sum::<f64>() / rs.len() as f64
            }
        };

        let window = ((STEADY_WINDOW_S / tick_dt).round() as usize).min(records.len());
        let steady = &records[records.len() - window..];

        let mut saturation_ticks = [0; 4];
        let mut phase_ticks = BTreeMap::new();
        for r in records {
            for (count, &sat) in saturation_ticks.iter_mut().zip(&r.saturated) {
                *count += usize::from(sat);
            }
            *phase_ticks.entry(r.phase.to_string()).or_insert(0) += 1;
        }

        Self {
            ticks: records.len(),
            settle_time_s,
            max_abs_pitch_rad: max_abs(|r| r.true_pitch, records),
            max_abs_roll_rad: max_abs(|r| r.true_roll, records),
            max_estimation_error_rad: records
                .iter()
                .map(|r| (r.est_pitch - r.true_pitch).abs().max((r.est_roll - r.true_roll).abs()))
                .fold(0.0, f64::max),
            steady_window_ticks: window,
            steady_mean_abs_pitch_rad: mean_abs(|r| r.true_pitch, steady),
            steady_mean_abs_roll_rad: mean_abs(|r| r.true_roll, steady),
            steady_max_abs_pitch_rad: max_abs(|r| r.true_pitch, steady),
            steady_max_abs_roll_rad: max_abs(|r| r.true_roll, steady),
            saturation_ticks,
            phase_ticks,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub telemetry: Vec<TelemetryRecord>,
    pub summary: SummaryReport,
    /// Non-blocking validation findings.
    pub warnings: Vec<Finding>,
}

impl SimOutput {
    pub fn telemetry_csv(&self) -> String {
        let mut buf = Vec::new();
        write_telemetry_csv(&self.telemetry, &mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// A validated scenario ready to step.
pub struct Simulation {
    plant: Plant,
    estimator: AttitudeEstimator,
    config: ControllerConfig,
    state: Option<ControllerState>,
    tick_dt: f64,
    ticks: usize,
}

impl Simulation {
    pub fn new(s: &Scenario) -> Result<(Self, Vec<Finding>)> {
        let findings = validate_scenario(s);
        let (errors, warnings): (Vec<_>, Vec<_>) =
            findings.into_iter().partition(|f| f.severity == Severity::Error);
        if !errors.is_empty() {
            return Err(SimError::Config(errors));
        }
        let corners = s.geometry.corners();
        let mut geometry = Vec::with_capacity(4);
        for cfg in &corners {
            geometry.push(SuspensionGeometry::from_config(cfg).map_err(PlantError::from)?);
        }
        let geometry: [SuspensionGeometry; 4] = geometry.try_into().expect("four corners");
        let plant = Plant::new(
            s.terrain.clone(),
            s.layout,
            geometry,
            &s.actuator,
            [s.initial_h_prime_m; 4],
            s.motion.clone(),
            s.imu,
            s.noise,
            s.seed,
        )?;
        let estimator = AttitudeEstimator::new(s.imu, s.filter)?;
        let config = ControllerConfig::new(&s.controller, geometry, s.layout, s.tick_dt_s)?;
        Ok((
            Self {
                plant,
                estimator,
                config,
                state: None,
                tick_dt: s.tick_dt_s,
                ticks: s.ticks(),
            },
            warnings,
        ))
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn controller_config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Runs one tick and returns its telemetry.
    pub fn tick(&mut self) -> Result<TelemetryRecord> {
        let frame = self.plant.sense();
        let estimate = self.estimator.step(&frame.imu)?;
        let state = match self.state {
            Some(state) => state,
            None => ControllerState::from_pots(frame.pots, &self.config)?,
        };
        let (state, commands) =
            controller::control_tick(&estimate.attitude, frame.clearance, frame.pots, &self.config, &state)?;
        self.state = Some(state);

        let truth = self.plant.state();
        let record = TelemetryRecord {
            t: truth.t,
            true_pitch: truth.attitude.pitch,
            true_roll: truth.attitude.roll,
            est_pitch: estimate.attitude.pitch,
            est_roll: estimate.attitude.roll,
            clearance: truth.clearance,
            extension: truth.actuators.map(|a| a.extension),
            pot: frame.pots,
            phase: state.phase,
            saturated: state.saturated,
        };
        self.plant.command(commands);
        self.plant.step(self.tick_dt)?;
        Ok(record)
    }

    pub fn run(mut self) -> Result<Vec<TelemetryRecord>> {
        (0..self.ticks).map(|_| self.tick()).collect()
    }
}

/// Validates and runs a scenario to completion.
pub fn run_scenario(s: &Scenario) -> Result<SimOutput> {
    let (sim, warnings) = Simulation::new(s)?;
    let pitch_db = sim.config.pitch_deadband;
    let roll_db = sim.config.roll_deadband;
    let telemetry = sim.run()?;
    let summary = SummaryReport::from_telemetry(&telemetry, pitch_db, roll_db, s.tick_dt_s);
    Ok(SimOutput {
        telemetry,
        summary,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_clean() {
        assert!(validate_scenario(&Scenario::default()).is_empty());
    }

    #[test]
    fn json_round_trip_and_minimal_config() {
        let s = Scenario::default();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
        let minimal = Scenario::from_json("{}").unwrap();
        assert_eq!(minimal, s);
        assert!(Scenario::from_json(r#"{"duration":1}"#).is_err());
    }

    #[test]
    fn per_corner_geometry_parses() {
        let g = serde_json::to_string(&GeometryConfig::default()).unwrap();
        let text = format!(r#"{{"geometry":[{g},{g},{g},{g}]}}"#);
        let s = Scenario::from_json(&text).unwrap();
        assert!(matches!(s.geometry, CornerGeometry::PerCorner(_)));
    }

    #[test]
    fn short_link_makes_clearance_unreachable() {
        let mut s = Scenario::default();
        s.controller.clearance_setpoint_m = 0.45;
        let findings = validate_scenario(&s);
        assert!(findings
            .iter()
            .any(|f| f.severity == Severity::Error && f.path == "controller.clearance_setpoint_m"));
    }

    #[test]
    fn steep_ramp_warns_about_saturation() {
        let mut s = Scenario::default();
        s.terrain = Terrain::Ramp {
            grade_deg: 45.0,
            azimuth_deg: 90.0,
        };
        s.initial_h_prime_m = 0.1;
        let findings = validate_scenario(&s);
        assert!(findings.iter().all(|f| f.severity == Severity::Warning), "{findings:?}");
        assert!(findings.iter().any(|f| f.path == "terrain"));
    }

    #[test]
    fn bad_values_name_their_paths() {
        let mut s = Scenario::default();
        s.tick_dt_s = 0.0;
        s.layout.track_m = -1.0;
        s.actuator.load_n[2] = -5.0;
        let paths: Vec<_> = validate_scenario(&s).into_iter().map(|f| f.path).collect();
        assert!(paths.contains(&"tick_dt_s".to_string()));
        assert!(paths.contains(&"layout".to_string()));
        assert!(paths.contains(&"actuator.load_n[2]".to_string()));
        assert!(matches!(run_scenario(&s), Err(SimError::Config(_))));
    }

    #[test]
    fn uniform_geometry_error_reported_once() {
        let mut s = Scenario::default();
        s.geometry = CornerGeometry::Uniform(GeometryConfig {
            link2_m: -1.0,
            ..GeometryConfig::default()
        });
        let geometry: Vec<_> = validate_scenario(&s).into_iter().filter(|f| f.path == "geometry").collect();
        assert_eq!(geometry.len(), 1, "{geometry:?}");
    }

    #[test]
    fn tick_count_guard() {
        let s = Scenario {
            duration_s: 1e6,
            tick_dt_s: 1e-3,
            ..Scenario::default()
        };
        assert!(validate_scenario(&s).iter().any(|f| f.path == "tick_dt_s"));
    }

    #[test]
    fn flat_level_run_stays_idle() {
        let s = Scenario {
            duration_s: 2.0,
            ..Scenario::default()
        };
        let out = run_scenario(&s).unwrap();
        assert_eq!(out.telemetry.len(), 200);
        for r in &out.telemetry {
            assert_eq!(r.phase, Phase::Idle);
            assert_eq!((r.true_pitch, r.true_roll), (0.0, 0.0));
            assert_eq!((r.est_pitch, r.est_roll), (0.0, 0.0));
        }
        assert_eq!(out.summary.settle_time_s, Some(0.0));
    }

    #[test]
    fn csv_header_is_stable() {
        let out = run_scenario(&Scenario {
            duration_s: 0.05,
            ..Scenario::default()
        })
        .unwrap();
        let csv = out.telemetry_csv();
        assert_eq!(
            csv.lines().next().unwrap(),
            "t,true_pitch,true_roll,est_pitch,est_roll,clearance,b1,b2,b3,b4,pot1,pot2,pot3,pot4,phase,sat1,sat2,sat3,sat4"
        );
        let parsed = read_telemetry_csv(csv.as_bytes()).unwrap();
        assert_eq!(parsed, out.telemetry);
    }

    #[test]
    fn telemetry_reader_rejects_garbage() {
        let text = format!("{TELEMETRY_HEADER}\n1,2,3\n");
        assert!(matches!(
            read_telemetry_csv(text.as_bytes()),
            Err(SimError::Telemetry { line: 2, .. })
        ));
        assert!(read_telemetry_csv("nope\n".as_bytes()).is_err());
    }
}
