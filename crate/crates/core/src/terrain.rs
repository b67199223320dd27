//! Analytic ground heightfields built from a few primitives.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Ground height `z(x, y)` in metres. Azimuths are measured counter-clockwise
/// from +x and point in the direction of increasing height or phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Terrain {
    Flat {
        #[serde(default)]
        height_m: f64,
    },
    /// Plane through the origin rising at `grade_deg` toward `azimuth_deg`.
    Ramp {
        grade_deg: f64,
        #[serde(default)]
        azimuth_deg: f64,
    },
    /// Rises by `height_m` across the line through `edge_m` (distance along
    /// the azimuth from the origin). Right-continuous.
    Step {
        height_m: f64,
        edge_m: f64,
        #[serde(default)]
        azimuth_deg: f64,
    },
    Sinusoid {
        amplitude_m: f64,
        wavelength_m: f64,
        #[serde(default)]
        azimuth_deg: f64,
        #[serde(default)]
        phase_deg: f64,
    },
    Composite { parts: Vec<Terrain> },
}

impl Default for Terrain {
    fn default() -> Self {
        Terrain::Flat { height_m: 0.0 }
    }
}

fn along(x: f64, y: f64, azimuth_deg: f64) -> f64 {
    let az = azimuth_deg.to_radians();
    x * az.cos() + y * az.sin()
}

impl Terrain {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        match self {
            Terrain::Flat { height_m } => *height_m,
            Terrain::Ramp {
                grade_deg,
                azimuth_deg,
            } => grade_deg.to_radians().tan() * along(x, y, *azimuth_deg),
            Terrain::Step {
                height_m,
                edge_m,
                azimuth_deg,
            } => {
                if along(x, y, *azimuth_deg) >= *edge_m {
                    *height_m
                } else {
                    0.0
                }
            }
            Terrain::Sinusoid {
                amplitude_m,
                wavelength_m,
                azimuth_deg,
                phase_deg,
            } => {
                let s = along(x, y, *azimuth_deg);
                amplitude_m * (TAU * s / wavelength_m + phase_deg.to_radians()).sin()
            }
            Terrain::Composite { parts } => parts.iter().map(|p| p.height(x, y)).sum(),
        }
    }

    /// Problems with the primitive parameters, keyed by a dotted path below `prefix`.
    pub fn check(&self, prefix: &str) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut finite = |name: &str, v: f64| {
            if !v.is_finite() {
                out.push((format!("{prefix}.{name}"), format!("must be finite, got {v}")));
            }
        };
        match self {
            Terrain::Flat { height_m } => finite("height_m", *height_m),
            Terrain::Ramp {
                grade_deg,
                azimuth_deg,
            } => {
                finite("grade_deg", *grade_deg);
                finite("azimuth_deg", *azimuth_deg);
                if grade_deg.abs() >= 90.0 {
                    out.push((
                        format!("{prefix}.grade_deg"),
                        format!("must be within (-90, 90), got {grade_deg}"),
                    ));
                }
            }
            Terrain::Step {
                height_m,
                edge_m,
                azimuth_deg,
            } => {
                finite("height_m", *height_m);
                finite("edge_m", *edge_m);
                finite("azimuth_deg", *azimuth_deg);
            }
            Terrain::Sinusoid {
                amplitude_m,
                wavelength_m,
                azimuth_deg,
                phase_deg,
            } => {
                finite("amplitude_m", *amplitude_m);
                finite("azimuth_deg", *azimuth_deg);
                finite("phase_deg", *phase_deg);
                if !(*wavelength_m > 0.0 && wavelength_m.is_finite()) {
                    out.push((
                        format!("{prefix}.wavelength_m"),
                        format!("must be positive, got {wavelength_m}"),
                    ));
                }
            }
            Terrain::Composite { parts } => {
                for (i, p) in parts.iter().enumerate() {
                    out.extend(p.check(&format!("{prefix}.parts[{i}]")));
                }
            }
        }
        out
    }
}
