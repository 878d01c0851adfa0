//! Conversion between natural oscillator units and laboratory units.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Result, ShellError};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of a lithium-7 atom in atomic mass units.
pub const LITHIUM_7_AMU: f64 = 7.016_003_437;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalUnits {
    /// Axial trap frequency in rad/s.
    pub omega_x_si: f64,
    pub mass_amu: f64,
    /// `sqrt(hbar / (m omega_x))` in micrometres.
    pub lx_microns: f64,
    /// `2 pi / omega_x` in milliseconds.
    pub period_ms: f64,
    /// The same quantities if the frequency were cycles per second instead.
    pub lx_microns_if_hz: f64,
    pub period_ms_if_hz: f64,
}

fn oscillator_length_microns(omega: f64, mass_amu: f64) -> f64 {
    (HBAR / (mass_amu * AMU * omega)).sqrt() * 1e6
}

/// Oscillator length and period for a trap frequency read as rad/s; the
/// cycles-per-second reading is carried alongside for comparison.
pub fn convert_units(omega_x_si: f64, mass_amu: f64) -> Result<PhysicalUnits> {
    for (key, value) in [("omega_x_si", omega_x_si), ("mass_amu", mass_amu)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ShellError::InvalidValue {
                key: key.into(),
                value: value.to_string(),
                reason: "must be positive".into(),
            });
        }
    }
    let omega_hz = TAU * omega_x_si;
    Ok(PhysicalUnits {
        omega_x_si,
        mass_amu,
        lx_microns: oscillator_length_microns(omega_x_si, mass_amu),
        period_ms: TAU / omega_x_si * 1e3,
        lx_microns_if_hz: oscillator_length_microns(omega_hz, mass_amu),
        period_ms_if_hz: TAU / omega_hz * 1e3,
    })
}
