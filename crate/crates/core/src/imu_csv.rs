//! Raw IMU stream input (`t,ax,ay,az,gx,gy,gz` in counts) and filtered
//! attitude output.

use std::io::{Read, Write};

use crate::attitude::{AttitudeEstimate, ImuSample};
use crate::sim::format_float;

pub const IMU_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];
pub const FILTER_HEADER: &str = "t,pitch_rad,roll_rad,pitch_raw,roll_raw,bias_pitch,bias_roll";

#[derive(Debug, thiserror::Error)]
pub enum ImuCsvError {
    #[error("imu csv line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_imu_csv(reader: impl Read) -> Result<Vec<ImuSample>, ImuCsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(IMU_HEADER) {
        return Err(ImuCsvError::Parse {
            line: 1,
            reason: format!("expected header {}, got {:?}", IMU_HEADER.join(","), header),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut v = [0.0; 7];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field.parse().map_err(|_| ImuCsvError::Parse {
                line,
                reason: format!("bad number {field:?}"),
            })?;
        }
        out.push(ImuSample {
            t: v[0],
            acc: [v[1], v[2], v[3]],
            gyro: [v[4], v[5], v[6]],
        });
    }
    Ok(out)
}

pub fn write_imu_csv(samples: &[ImuSample], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", IMU_HEADER.join(","))?;
    for s in samples {
        let fields: Vec<String> = [s.t]
            .into_iter()
            .chain(s.acc)
            .chain(s.gyro)
            .map(format_float)
            .collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_filter_csv(estimates: &[AttitudeEstimate], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{FILTER_HEADER}")?;
    for e in estimates {
        let raw = e.attitude.to_raw();
        let fields = [
            e.t,
            e.attitude.pitch,
            e.attitude.roll,
            raw.pitch,
            raw.roll,
            e.pitch_bias,
            e.roll_bias,
        ]
        .map(format_float);
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
