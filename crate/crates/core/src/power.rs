//! Power budget audit and battery runtime estimate.
//!
//! Published figures are never corrected in place: the audit reports the
//! recomputed value next to the published one and flags disagreement.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows whose recomputed energy differs from the published value by more
/// than this are flagged.
pub const AUDIT_TOLERANCE_MWH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("row {row} ({name}): {reason}")]
    InvalidRow {
        row: usize,
        name: String,
        reason: String,
    },
    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },
    #[error("invalid battery bank: {0}")]
    InvalidBank(String),
    #[error("total power draw must be positive, got {0} W")]
    NoLoad(f64),
}

pub type Result<T> = std::result::Result<T, PowerError>;

/// One consumer in the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub name: String,
    pub voltage_v: f64,
    /// Current per unit.
    pub current_ma: f64,
    pub count: u32,
    /// Hours at the stated power.
    pub duty_hours: f64,
}

impl PowerRow {
    pub fn new(name: &str, voltage_v: f64, current_ma: f64, count: u32, duty_hours: f64) -> Self {
        Self {
            name: name.to_string(),
            voltage_v,
            current_ma,
            count,
            duty_hours,
        }
    }

    fn validate(&self, row: usize) -> Result<()> {
        let fail = |reason: String| {
            Err(PowerError::InvalidRow {
                row,
                name: self.name.clone(),
                reason,
            })
        };
        if !(self.voltage_v > 0.0 && self.voltage_v.is_finite()) {
            return fail(format!("voltage must be positive, got {}", self.voltage_v));
        }
        if !(self.current_ma >= 0.0 && self.current_ma.is_finite()) {
            return fail(format!("current must be >= 0, got {}", self.current_ma));
        }
        if self.count < 1 {
            return fail("count must be at least 1".into());
        }
        if !(self.duty_hours > 0.0 && self.duty_hours.is_finite()) {
            return fail(format!("duty hours must be positive, got {}", self.duty_hours));
        }
        Ok(())
    }

    /// Draw in milliwatts.
    pub fn power_mw(&self) -> f64 {
        self.voltage_v * self.current_ma * f64::from(self.count)
    }
}

/// Energy in mWh: volts x mA x count x hours.
pub fn row_energy(row: &PowerRow) -> f64 {
    row.voltage_v * row.current_ma * f64::from(row.count) * row.duty_hours
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowAudit {
    pub name: String,
    pub computed_mwh: f64,
    pub published_mwh: Option<f64>,
    pub matches: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub rows: Vec<RowAudit>,
    pub computed_total_mwh: f64,
    /// Sum of the published row values, where every row has one.
    pub published_rows_sum_mwh: Option<f64>,
    pub published_total_mwh: Option<f64>,
    /// `computed_total - published_total`.
    pub total_delta_mwh: Option<f64>,
}

impl AuditReport {
    pub fn mismatches(&self) -> impl Iterator<Item = &RowAudit> {
        self.rows.iter().filter(|r| r.matches == Some(false))
    }
}

/// Recomputes every row and compares against the published values.
pub fn audit_table(
    rows: &[PowerRow],
    published: &[Option<f64>],
    published_total: Option<f64>,
) -> Result<AuditReport> {
    if published.len() != rows.len() {
        return Err(PowerError::Parse {
            row: rows.len().min(published.len()),
            reason: format!("{} rows but {} published values", rows.len(), published.len()),
        });
    }
    let mut audits = Vec::with_capacity(rows.len());
    for (i, (row, pub_value)) in rows.iter().zip(published).enumerate() {
        row.validate(i + 1)?;
        let computed = row_energy(row);
        audits.push(RowAudit {
            name: row.name.clone(),
            computed_mwh: computed,
            published_mwh: *pub_value,
            matches: pub_value.map(|p| (computed - p).abs() <= AUDIT_TOLERANCE_MWH),
        });
    }
    let computed_total: f64 = audits.iter().map(|a| a.computed_mwh).sum();
    let published_rows_sum = published.iter().copied().sum::<Option<f64>>();
    Ok(AuditReport {
        rows: audits,
        computed_total_mwh: computed_total,
        published_rows_sum_mwh: published_rows_sum,
        published_total_mwh: published_total,
        total_delta_mwh: published_total.map(|p| computed_total - p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryBank {
    pub cells_in_series_per_pack: u32,
    pub pack_capacity_mah: f64,
    pub packs_in_series: u32,
    pub nominal_cell_voltage_v: f64,
    /// Usable fraction of the nominal energy, in (0, 1].
    pub derating: f64,
}

impl Default for BatteryBank {
    /// Three 4S 6000 mAh packs in series at LiPo nominal voltage.
    fn default() -> Self {
        Self {
            cells_in_series_per_pack: 4,
            pack_capacity_mah: 6000.0,
            packs_in_series: 3,
            nominal_cell_voltage_v: 3.7,
            derating: 1.0,
        }
    }
}

impl BatteryBank {
    pub fn validate(&self) -> Result<()> {
        if self.cells_in_series_per_pack < 1 || self.packs_in_series < 1 {
            return Err(PowerError::InvalidBank("cell and pack counts must be >= 1".into()));
        }
        if !(self.pack_capacity_mah > 0.0 && self.pack_capacity_mah.is_finite()) {
            return Err(PowerError::InvalidBank("capacity must be positive".into()));
        }
        if !(self.nominal_cell_voltage_v > 0.0 && self.nominal_cell_voltage_v.is_finite()) {
            return Err(PowerError::InvalidBank("cell voltage must be positive".into()));
        }
        if !(self.derating > 0.0 && self.derating <= 1.0) {
            return Err(PowerError::InvalidBank(format!("derating must be in (0, 1], got {}", self.derating)));
        }
        Ok(())
    }

    pub fn voltage_v(&self) -> f64 {
        self.nominal_cell_voltage_v * f64::from(self.cells_in_series_per_pack * self.packs_in_series)
    }

    /// Series packs share one capacity.
    pub fn capacity_mah(&self) -> f64 {
        self.pack_capacity_mah
    }

    /// Nominal energy before derating, Wh.
    pub fn energy_wh(&self) -> f64 {
        self.voltage_v() * self.capacity_mah() / 1000.0
    }
}

/// Minutes of operation with every row drawing its stated power at once.
pub fn runtime_estimate(rows: &[PowerRow], bank: &BatteryBank) -> Result<f64> {
    bank.validate()?;
    for (i, row) in rows.iter().enumerate() {
        row.validate(i + 1)?;
    }
    let total_w: f64 = rows.iter().map(PowerRow::power_mw).sum::<f64>() / 1000.0;
    if !(total_w > 0.0) {
        return Err(PowerError::NoLoad(total_w));
    }
    Ok(60.0 * bank.energy_wh() * bank.derating / total_w)
}

/// Rows, per-row published energies and the published total, as read from CSV.
pub type ParsedBudget = (Vec<PowerRow>, Vec<Option<f64>>, Option<f64>);

/// Reads `name,voltage_V,current_mA,count,duty_h[,published_mWh]` rows.
///
/// A row named `total` (case-insensitive) carries only the published total in
/// its last column.
pub fn read_rows_csv(reader: impl Read) -> Result<ParsedBudget> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers().map_err(|e| PowerError::Parse {
        row: 0,
        reason: e.to_string(),
    })?;
    if header.len() < 5 || &header[0] != "name" {
        return Err(PowerError::Parse {
            row: 0,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    let mut published = Vec::new();
    let mut total = None;
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| PowerError::Parse {
            row,
            reason: e.to_string(),
        })?;
        let name = record.get(0).unwrap_or("").to_string();
        let num = |idx: usize, what: &str| -> Result<f64> {
            let s = record.get(idx).unwrap_or("");
            s.parse::<f64>().map_err(|_| PowerError::Parse {
                row,
                reason: format!("{name}: bad {what} {s:?}"),
            })
        };
        if name.eq_ignore_ascii_case("total") {
            total = Some(num(record.len() - 1, "total")?);
            continue;
        }
        if record.len() < 5 {
            return Err(PowerError::Parse {
                row,
                reason: format!("{name}: expected at least 5 fields, got {}", record.len()),
            });
        }
        let count = record[3].parse::<u32>().map_err(|_| PowerError::Parse {
            row,
            reason: format!("{name}: bad count {:?}", &record[3]),
        })?;
        let parsed = PowerRow::new(&name, num(1, "voltage")?, num(2, "current")?, count, num(4, "duty")?);
        published.push(match record.get(5) {
            Some(s) if !s.is_empty() => Some(num(5, "published energy")?),
            _ => None,
        });
        rows.push(parsed);
    }
    Ok((rows, published, total))
}

/// The rover's published power budget: rows, published per-row energies and
/// the published total, all in mWh.
pub fn published_budget() -> (Vec<PowerRow>, Vec<Option<f64>>, f64) {
    let table = [
        ("ATMega 2560", 9.0, 50.0, 1, 225.0),
        ("I/O Pins", 5.0, 40.0, 20, 2000.0),
        ("Razor IMU", 3.3, 20.0, 1, 33.0),
        ("GPS Media Tech 3329", 3.3, 48.0, 1, 79.2),
        ("Wireless IP Camera Fascam", 6.0, 1000.0, 1, 300.0),
        ("Xbee Transceiver 2.4Ghz", 3.3, 40.0, 1, 66.0),
        ("Ultrasonic Range Finder XL-Maxsonar EZ1", 5.0, 4.0, 1, 10.0),
        ("Sabertooth Dual 25A Drivers", 5.0, 1500.0, 2, 7500.0),
        ("Drive Motor", 16.0, 1500.0, 4, 48000.0),
        ("Linear Actuator", 12.0, 500.0, 4, 12000.0),
        ("Pololu Driver", 5.0, 500.0, 4, 5000.0),
    ];
    let rows = table
        .iter()
        .map(|&(name, v, ma, n, _)| PowerRow::new(name, v, ma, n, 0.5))
        .collect();
    let published = table.iter().map(|row| Some(row.4)).collect();
    (rows, published, 74213.2)
}
