use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rover-suspension"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["simulate"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["kinematics", "h2b", "--h", "abc"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn simulate_writes_identical_csv_for_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ramp10_noisy.json");
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    let summary = dir.path().join("summary.json");
    let first = run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&a), "--summary", path_str(&summary)]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(code(&run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&b), "--summary", path_str(&summary)])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    assert_eq!(code(&run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&c), "--seed", "123"])), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("t,true_pitch,true_roll,est_pitch,est_roll,clearance,b1,b2,b3,b4,"));
    assert_eq!(text.lines().count(), 6001);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(report["steady_mean_abs_pitch_rad"].as_f64().unwrap() < 1.5f64.to_radians());
}

#[test]
fn simulate_rejects_bad_config_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"tick_dt_s": -0.01, "controller": {"clearance_setpoint_m": 0.9}}"#).unwrap();
    let out = run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&dir.path().join("x.csv"))]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tick_dt_s"), "{err}");

    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(code(&run(&["validate", "--config", path_str(&cfg)])), 2);
    assert_eq!(code(&run(&["validate", "--config", "/nonexistent/scenario.json"])), 2);
}

#[test]
fn validate_reports_warnings_without_failing() {
    let out = run(&["validate", "--config", path_str(&configs().join("roll25_saturating.json"))]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("warning: terrain"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unreachable.json");
    fs::write(&cfg, r#"{"controller": {"clearance_setpoint_m": 0.45}}"#).unwrap();
    let out = run(&["validate", "--config", path_str(&cfg)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("controller.clearance_setpoint_m"));
}

#[test]
fn kinematics_round_trip_through_cli() {
    let geom = configs().join("geometry.json");
    let out = run(&["kinematics", "h2b", "--geom", path_str(&geom), "--h", "0.12"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let b = v["extension_m"].as_f64().unwrap();
    let out = run(&["kinematics", "b2h", "--geom", path_str(&geom), "--b", &format!("{b:.17e}")]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["h_prime_m"].as_f64().unwrap() - 0.12).abs() < 1e-9);

    assert_eq!(code(&run(&["kinematics", "h2b", "--h", "0.5"])), 2);
    assert_eq!(code(&run(&["kinematics", "b2h", "--b", "-0.2"])), 2);
}

#[test]
fn filter_round_trip_and_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("imu.csv");
    let output = dir.path().join("att.csv");
    let cal = configs().join("imu_calibration.json");
    // Level, at rest: ax = ay = 1.5 V zero point, az one g higher.
    let zero = 1.5 / 3.3 * 1023.0;
    let mut text = String::from("t,ax,ay,az,gx,gy,gz\n");
    for k in 0..50 {
        text += &format!("{},{zero},{zero},{},512,512,512\n", k as f64 * 0.01, zero + 93.0);
    }
    fs::write(&input, &text).unwrap();
    let out = run(&["filter", "--cal", path_str(&cal), "--in", path_str(&input), "--out", path_str(&output)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&output).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,pitch_rad,roll_rad,pitch_raw,roll_raw,bias_pitch,bias_roll");
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(f[1].abs() < 1e-12 && f[2].abs() < 1e-12);
        assert!((f[3] - std::f64::consts::PI).abs() < 1e-12);
    }

    fs::write(&input, "t,ax,ay,az,gx,gy,gz\n1,465,465,558,512,512,512\n0.5,465,465,558,512,512,512\n").unwrap();
    let out = run(&["filter", "--cal", path_str(&cal), "--in", path_str(&input), "--out", path_str(&output)]);
    assert_eq!(code(&out), 3);
}

#[test]
fn power_reports_audit_and_runtime() {
    let out = run(&[
        "power",
        "--rows",
        path_str(&configs().join("table2.csv")),
        "--bank",
        path_str(&configs().join("bank.json")),
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("MISMATCH"));
    assert!(text.contains("computed total mWh: 77913.2"));
    assert!(text.contains("total delta mWh: 3700.0"));
    assert!(text.contains("estimated runtime min: 102.58"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("rows.csv");
    fs::write(&bad, "name,voltage_V,current_mA,count,duty_h\nx,5,abc,1,1\n").unwrap();
    assert_eq!(code(&run(&["power", "--rows", path_str(&bad)])), 2);
}
