//! Closed-form geometry of one suspension corner.
//!
//! A linear actuator of unactuated length `a` and extension `b` runs from a
//! pivot on the chassis to the end of link 1 of a right-angle bell crank.
//! The bell crank pivots on the chassis a distance `c` from the actuator
//! pivot; link 2 carries the wheel centre. With `alpha` the angle between
//! link 1 and the chassis:
//!
//! ```text
//! (a + b)^2 = (L1 sin alpha)^2 + (c - L1 cos alpha)^2
//! h'        = L2 cos alpha
//! ```
//!
//! where `h'` is the height of the chassis above the wheel centre.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of link 2 the controller and plant may use as chassis height.
pub const MAX_HEIGHT_FRACTION: f64 = 0.95;

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_TOL_M: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("link angle {0} rad outside (0, pi/2]")]
    InvalidAngle(f64),
    #[error("height {h_prime} m exceeds Link 2 reach {link2} m")]
    HeightOutOfDomain { h_prime: f64, link2: f64 },
    #[error("extension {b} m outside reachable range [{b_min}, {b_max}] m")]
    ExtensionOutOfRange { b: f64, b_min: f64, b_max: f64 },
}

pub type Result<T> = std::result::Result<T, KinematicsError>;

/// Arm lengths of the bell crank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeverArms {
    link1: f64,
    link2: f64,
}

impl LeverArms {
    pub fn new(link1: f64, link2: f64) -> Result<Self> {
        if !link1.is_finite() || !link2.is_finite() {
            return Err(KinematicsError::NonFinite("lever arm"));
        }
        if link1 <= 0.0 || link2 <= 0.0 {
            return Err(KinematicsError::InvalidGeometry(format!(
                "lever arms must be positive (L1={link1}, L2={link2})"
            )));
        }
        Ok(Self { link1, link2 })
    }

    pub fn link1(&self) -> f64 {
        self.link1
    }

    pub fn link2(&self) -> f64 {
        self.link2
    }

    pub fn swapped(&self) -> Self {
        Self {
            link1: self.link2,
            link2: self.link1,
        }
    }
}

/// Angle between link 1 and the chassis, in `(0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LinkAngle(f64);

impl LinkAngle {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(KinematicsError::NonFinite("link angle"));
        }
        if alpha <= 0.0 || alpha > FRAC_PI_2 {
            return Err(KinematicsError::InvalidAngle(alpha));
        }
        Ok(Self(alpha))
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Angle between link 2 and the chassis.
    pub fn link2_angle(self) -> f64 {
        FRAC_PI_2 - self.0
    }
}

/// Serialized form of a corner's linkage constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub unactuated_length_m: f64,
    pub stroke_m: f64,
    pub pivot_distance_m: f64,
    pub link1_m: f64,
    pub link2_m: f64,
    pub wheel_radius_m: f64,
}

impl Default for GeometryConfig {
    /// Placeholder linkage. Only the 4 inch stroke is a measured value.
    fn default() -> Self {
        Self {
            unactuated_length_m: 0.16,
            stroke_m: 0.1016,
            pivot_distance_m: 0.25,
            link1_m: 0.12,
            link2_m: 0.20,
            wheel_radius_m: 0.10,
        }
    }
}

/// Validated linkage constants of one suspension corner.
///
/// Construction also records the operating interval of `h'`: the sub-range of
/// `[0, 0.95 L2]` over which the actuator extension stays in `[0, stroke]`.
/// The extension is strictly decreasing in `h'` over the whole domain, so the
/// interval is a single segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspensionGeometry {
    unactuated_length: f64,
    stroke: f64,
    pivot_distance: f64,
    arms: LeverArms,
    wheel_radius: f64,
    height_range: (f64, f64),
}

impl SuspensionGeometry {
    pub fn new(
        unactuated_length: f64,
        stroke: f64,
        pivot_distance: f64,
        arms: LeverArms,
        wheel_radius: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("unactuated length", unactuated_length),
            ("stroke", stroke),
            ("pivot distance", pivot_distance),
            ("wheel radius", wheel_radius),
        ] {
            if !v.is_finite() {
                return Err(KinematicsError::NonFinite(name));
            }
            if v <= 0.0 {
                return Err(KinematicsError::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let mut geom = Self {
            unactuated_length,
            stroke,
            pivot_distance,
            arms,
            wheel_radius,
            height_range: (0.0, 0.0),
        };

        // Over alpha in (0, pi/2] the extension spans (b(0+), b(pi/2)].
        let b_top = geom.extension_at_cos(0.0);
        let b_bottom = geom.extension_at_cos(1.0);
        if b_top < 0.0 || b_bottom >= stroke {
            return Err(KinematicsError::InvalidGeometry(format!(
                "no link angle in (0, 90] deg gives an extension within [0, {stroke}] m \
                 (extension spans ({b_bottom}, {b_top}] m)"
            )));
        }

        let h_cap = MAX_HEIGHT_FRACTION * arms.link2;
        let h_lo = if b_top <= stroke {
            0.0
        } else {
            geom.height_for_extension(stroke)?
        };
        let h_hi = if geom.extension_at_cos(h_cap / arms.link2) >= 0.0 {
            h_cap
        } else {
            geom.height_for_extension(0.0)?
        };
        if !(h_lo < h_hi) {
            return Err(KinematicsError::InvalidGeometry(format!(
                "no operable height within [0, {h_cap}] m for stroke {stroke} m"
            )));
        }
        geom.height_range = (h_lo, h_hi);
        Ok(geom)
    }

    pub fn from_config(cfg: &GeometryConfig) -> Result<Self> {
        Self::new(
            cfg.unactuated_length_m,
            cfg.stroke_m,
            cfg.pivot_distance_m,
            LeverArms::new(cfg.link1_m, cfg.link2_m)?,
            cfg.wheel_radius_m,
        )
    }

    pub fn unactuated_length(&self) -> f64 {
        self.unactuated_length
    }

    pub fn stroke(&self) -> f64 {
        self.stroke
    }

    pub fn pivot_distance(&self) -> f64 {
        self.pivot_distance
    }

    pub fn arms(&self) -> LeverArms {
        self.arms
    }

    pub fn wheel_radius(&self) -> f64 {
        self.wheel_radius
    }

    /// Operating interval `[h_min, h_max]` of chassis height above the wheel centre.
    pub fn height_range(&self) -> (f64, f64) {
        self.height_range
    }

    /// Extension interval matching [`Self::height_range`], lowest first.
    pub fn extension_range(&self) -> (f64, f64) {
        let (h_lo, h_hi) = self.height_range;
        let b_lo = extension_for_height(self, h_hi).expect("operating range is in domain");
        let b_hi = extension_for_height(self, h_lo).expect("operating range is in domain");
        (b_lo.max(0.0), b_hi.min(self.stroke))
    }

    /// Reachable image of [`extension_for_height`] over `h' in [0, L2)`:
    /// `(b at h' -> L2, b at h' = 0)`.
    pub fn extension_domain(&self) -> (f64, f64) {
        (self.extension_at_cos(1.0), self.extension_at_cos(0.0))
    }

    pub fn clamp_height(&self, h_prime: f64) -> f64 {
        h_prime.clamp(self.height_range.0, self.height_range.1)
    }

    fn extension_at_cos(&self, cos_alpha: f64) -> f64 {
        let sin_alpha = (1.0 - cos_alpha * cos_alpha).max(0.0).sqrt();
        let l1 = self.arms.link1;
        let rise = l1 * sin_alpha;
        let run = self.pivot_distance - l1 * cos_alpha;
        rise.hypot(run) - self.unactuated_length
    }
}

/// Force at the link 2 end for a force `f1` applied at link 1 (moment balance).
pub fn lever_output_force(f1: f64, arms: LeverArms) -> Result<f64> {
    if !f1.is_finite() {
        return Err(KinematicsError::NonFinite("lever input force"));
    }
    Ok(f1 * (arms.link1 / arms.link2))
}

/// Small-rotation displacement ratio `dx / dy = L1 / L2`.
pub fn lever_displacement_ratio(arms: LeverArms) -> f64 {
    arms.link1 / arms.link2
}

/// Actuator extension holding link 1 at `angle`. May be negative or exceed the
/// stroke; reachability is the caller's concern.
pub fn extension_for_angle(geom: &SuspensionGeometry, angle: LinkAngle) -> f64 {
    let l1 = geom.arms.link1;
    let alpha = angle.radians();
    let rise = l1 * alpha.sin();
    let run = geom.pivot_distance - l1 * alpha.cos();
    (rise * rise + run * run).sqrt() - geom.unactuated_length
}

/// Link angle that puts the chassis `h_prime` above the wheel centre.
pub fn angle_for_height(geom: &SuspensionGeometry, h_prime: f64) -> Result<LinkAngle> {
    if !h_prime.is_finite() {
        return Err(KinematicsError::NonFinite("height"));
    }
    let link2 = geom.arms.link2;
    if h_prime.abs() >= link2 || h_prime < 0.0 {
        return Err(KinematicsError::HeightOutOfDomain { h_prime, link2 });
    }
    LinkAngle::new(FRAC_PI_2 - (h_prime / link2).asin())
}

/// Actuator extension for a desired chassis height above the wheel centre.
pub fn extension_for_height(geom: &SuspensionGeometry, h_prime: f64) -> Result<f64> {
    Ok(extension_for_angle(geom, angle_for_height(geom, h_prime)?))
}

/// Inverse of [`extension_for_height`] by bisection over `h' in [0, L2)`.
pub fn height_for_extension(geom: &SuspensionGeometry, b: f64) -> Result<f64> {
    geom.height_for_extension(b)
}

impl SuspensionGeometry {
    fn height_for_extension(&self, b: f64) -> Result<f64> {
        if !b.is_finite() {
            return Err(KinematicsError::NonFinite("extension"));
        }
        let (b_min, b_max) = self.extension_domain();
        if b > b_max || b <= b_min {
            return Err(KinematicsError::ExtensionOutOfRange { b, b_min, b_max });
        }
        // b(h') is strictly decreasing.
        let mut lo = 0.0;
        let mut hi = self.arms.link2;
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let b_mid = extension_for_height(self, mid)?;
            if b_mid > b {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < BISECTION_TOL_M * 1e-3 {
                break;
            }
        }
        let h = 0.5 * (lo + hi);
        Ok(if h >= self.arms.link2 { lo } else { h })
    }
}

/// Precomputed `h' -> b` table over the operating range with linear
/// interpolation between samples.
#[derive(Debug, Clone)]
pub struct ExtensionTable {
    h_min: f64,
    step: f64,
    extensions: Vec<f64>,
}

impl ExtensionTable {
    pub fn new(geom: &SuspensionGeometry, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(KinematicsError::InvalidGeometry(
                "lookup table needs at least two samples".into(),
            ));
        }
        let (h_min, h_max) = geom.height_range();
        let step = (h_max - h_min) / (samples - 1) as f64;
        let extensions = (0..samples)
            .map(|i| {
                let h = if i + 1 == samples {
                    h_max
                } else {
                    h_min + step * i as f64
                };
                extension_for_height(geom, h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            h_min,
            step,
            extensions,
        })
    }

    pub fn extension(&self, h_prime: f64) -> f64 {
        let last = self.extensions.len() - 1;
        let pos = ((h_prime - self.h_min) / self.step).clamp(0.0, last as f64);
        let i = (pos.floor() as usize).min(last - 1);
        let frac = pos - i as f64;
        self.extensions[i] + frac * (self.extensions[i + 1] - self.extensions[i])
    }
}
