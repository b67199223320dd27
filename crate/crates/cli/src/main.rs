use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use suspension_core::attitude::{estimate_attitude, FilterParams, ImuCalibration};
use suspension_core::imu_csv::{read_imu_csv, write_filter_csv};
use suspension_core::kinematics::{self, GeometryConfig, KinematicsError, SuspensionGeometry};
use suspension_core::power::{audit_table, read_rows_csv, runtime_estimate, BatteryBank};
use suspension_core::sim::{self, Scenario, Severity, SimError};

#[derive(Parser)]
#[command(name = "rover-suspension", version, about = "Active suspension leveling simulator and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write telemetry CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON destination; printed to stdout when omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convert between chassis height and actuator extension.
    Kinematics {
        #[command(subcommand)]
        op: KinematicsOp,
    },
    /// Run the attitude filter over a raw IMU CSV.
    Filter {
        /// IMU calibration JSON.
        #[arg(long)]
        cal: PathBuf,
        /// Optional filter tuning JSON.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit a power budget CSV and estimate runtime.
    Power {
        #[arg(long)]
        rows: PathBuf,
        /// Battery bank JSON; defaults to three 4S 6 Ah packs.
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    /// Check a scenario config and list findings.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum KinematicsOp {
    /// Height above wheel centre (m) to actuator extension (m).
    H2b {
        #[arg(long)]
        geom: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        h: f64,
    },
    /// Actuator extension (m) to height above wheel centre (m).
    B2h {
        #[arg(long)]
        geom: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
    },
}

/// Failure classes mapped onto process exit codes.
enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn config_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_err(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_text(path)?).map_err(|e| config_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| config_err(path, e))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read_text(path)?).map_err(|e| config_err(path, e))
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Config(_) | SimError::Parse(_) | SimError::Io(_) | SimError::Telemetry { .. } => {
            Failure::Config(e.to_string())
        }
        SimError::Plant(_) | SimError::Estimation(_) | SimError::Controller(_) => Failure::Numeric(e.to_string()),
    }
}

fn simulate(config: &Path, out: &Path, summary: Option<&Path>, seed: Option<u64>) -> CmdResult {
    let mut scenario = load_scenario(config)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let result = sim::run_scenario(&scenario).map_err(sim_failure)?;
    for w in &result.warnings {
        eprintln!("{w}");
    }
    let mut w = create(out)?;
    sim::write_telemetry_csv(&result.telemetry, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| config_err(out, e))?;

    let text = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    match summary {
        Some(path) => fs::write(path, text + "\n").map_err(|e| config_err(path, e))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn load_geometry(path: Option<&Path>) -> Result<SuspensionGeometry, Failure> {
    let cfg: GeometryConfig = match path {
        Some(p) => read_json(p)?,
        None => GeometryConfig::default(),
    };
    SuspensionGeometry::from_config(&cfg).map_err(|e| Failure::Config(format!("geometry: {e}")))
}

fn kinematics_failure(e: KinematicsError) -> Failure {
    match e {
        KinematicsError::NonFinite(_) => Failure::Numeric(e.to_string()),
        _ => Failure::Config(e.to_string()),
    }
}

fn run_kinematics(op: &KinematicsOp) -> CmdResult {
    let (geom, h, b) = match op {
        KinematicsOp::H2b { geom, h } => {
            let g = load_geometry(geom.as_deref())?;
            let b = kinematics::extension_for_height(&g, *h).map_err(kinematics_failure)?;
            (g, *h, b)
        }
        KinematicsOp::B2h { geom, b } => {
            let g = load_geometry(geom.as_deref())?;
            let h = kinematics::height_for_extension(&g, *b).map_err(kinematics_failure)?;
            (g, h, *b)
        }
    };
    let alpha = kinematics::angle_for_height(&geom, h).map_err(kinematics_failure)?;
    let (h_lo, h_hi) = geom.height_range();
    let out = json!({
        "h_prime_m": h,
        "extension_m": b,
        "alpha_rad": alpha.radians(),
        "within_operating_range": (h_lo..=h_hi).contains(&h) && (0.0..=geom.stroke()).contains(&b),
        "height_range_m": [h_lo, h_hi],
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn filter(cal: &Path, params: Option<&Path>, input: &Path, out: &Path) -> CmdResult {
    let cal: ImuCalibration = read_json(cal)?;
    let params: FilterParams = match params {
        Some(p) => read_json(p)?,
        None => FilterParams::default(),
    };
    let file = File::open(input).map_err(|e| config_err(input, e))?;
    let samples = read_imu_csv(BufReader::new(file)).map_err(|e| config_err(input, e))?;
    let estimates = estimate_attitude(&samples, &cal, &params).map_err(|e| Failure::Numeric(e.to_string()))?;
    let mut w = create(out)?;
    write_filter_csv(&estimates, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| config_err(out, e))
}

fn power(rows: &Path, bank: Option<&Path>) -> CmdResult {
    let file = File::open(rows).map_err(|e| config_err(rows, e))?;
    let (rows_v, published, total) = read_rows_csv(BufReader::new(file)).map_err(|e| config_err(rows, e))?;
    let bank: BatteryBank = match bank {
        Some(p) => read_json(p)?,
        None => BatteryBank::default(),
    };
    let report = audit_table(&rows_v, &published, total).map_err(|e| config_err(rows, e))?;
    let minutes = runtime_estimate(&rows_v, &bank).map_err(|e| Failure::Config(e.to_string()))?;

    let stdout = io::stdout();
    let mut o = stdout.lock();
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
    let _ = writeln!(o, "{:<42} {:>12} {:>12}  status", "row", "computed_mWh", "published");
    for r in &report.rows {
        let status = match r.matches {
            Some(true) => "ok",
            Some(false) => "MISMATCH",
            None => "-",
        };
        let _ = writeln!(
            o,
            "{:<42} {:>12.1} {:>12}  {status}",
            r.name,
            r.computed_mwh,
            fmt_opt(r.published_mwh)
        );
    }
    let _ = writeln!(o, "computed total mWh: {:.1}", report.computed_total_mwh);
    let _ = writeln!(o, "published rows sum mWh: {}", fmt_opt(report.published_rows_sum_mwh));
    let _ = writeln!(o, "published total mWh: {}", fmt_opt(report.published_total_mwh));
    let _ = writeln!(o, "total delta mWh: {}", fmt_opt(report.total_delta_mwh));
    let _ = writeln!(o, "mismatched rows: {}", report.mismatches().count());
    let _ = writeln!(
        o,
        "battery bank: {:.1} V, {:.0} mAh, {:.1} Wh",
        bank.voltage_v(),
        bank.capacity_mah(),
        bank.energy_wh()
    );
    let _ = writeln!(o, "estimated runtime min: {minutes:.2} (published figure: ~72)");
    Ok(())
}

fn validate(config: &Path) -> CmdResult {
    let scenario = load_scenario(config)?;
    let findings = sim::validate_scenario(&scenario);
    for f in &findings {
        println!("{f}");
    }
    let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
    if errors > 0 {
        return Err(Failure::Config(format!("{errors} error(s) in {}", config.display())));
    }
    println!("ok: {} warning(s)", findings.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate {
            config,
            out,
            summary,
            seed,
        } => simulate(config, out, summary.as_deref(), *seed),
        Command::Kinematics { op } => run_kinematics(op),
        Command::Filter {
            cal,
            params,
            input,
            out,
        } => filter(cal, params.as_deref(), input, out),
        Command::Power { rows, bank } => power(rows, bank.as_deref()),
        Command::Validate { config } => validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
