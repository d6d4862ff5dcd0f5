//! Physical constants and unit conversions.
//!
//! Everything inside the crate is strict SI. Lab units (nm, THz,
//! ps²/m, cm⁻¹THz⁻¹, mW) are only accepted at the configuration boundary,
//! through the helpers here.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("{quantity} must be positive and finite, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
}

/// Exact SI defining constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J·s
    pub planck: f64,
    /// J/K
    pub boltzmann: f64,
    /// m/s
    pub light_speed: f64,
}

pub const CONSTANTS: PhysicalConstants =
    PhysicalConstants { planck: 6.626_070_15e-34, boltzmann: 1.380_649e-23, light_speed: 299_792_458.0 };

impl Default for PhysicalConstants {
    fn default() -> Self {
        CONSTANTS
    }
}

pub const THZ: f64 = 1e12;
pub const NM: f64 = 1e-9;
pub const MW: f64 = 1e-3;
pub const PS2_PER_M: f64 = 1e-24;

/// Optical frequency (Hz) of a vacuum wavelength (m).
pub fn wavelength_to_frequency(wavelength: f64) -> Result<f64, UnitError> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(UnitError::NonPositive { quantity: "wavelength", value: wavelength });
    }
    Ok(CONSTANTS.light_speed / wavelength)
}

/// Vacuum wavelength (m) of an optical frequency (Hz).
pub fn frequency_to_wavelength(frequency: f64) -> Result<f64, UnitError> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(UnitError::NonPositive { quantity: "frequency", value: frequency });
    }
    Ok(CONSTANTS.light_speed / frequency)
}

/// Signed detuning ν − ν_pump (Hz) of `wavelength` from a pump at `pump_wavelength`.
pub fn detuning_from_wavelengths(wavelength: f64, pump_wavelength: f64) -> Result<f64, UnitError> {
    Ok(wavelength_to_frequency(wavelength)? - wavelength_to_frequency(pump_wavelength)?)
}

/// Photon energy h·ν in joules.
pub fn photon_energy(frequency: f64) -> f64 {
    CONSTANTS.planck * frequency
}

/// κ in cm⁻¹THz⁻¹ to m⁻¹Hz⁻¹.
pub fn kappa_from_per_cm_per_thz(kappa: f64) -> f64 {
    // cm⁻¹ = 100 m⁻¹, THz⁻¹ = 1e-12 Hz⁻¹
    kappa * 100.0 / THZ
}

pub fn kappa_to_per_cm_per_thz(kappa: f64) -> f64 {
    kappa * THZ / 100.0
}

/// Loss in dB to a transmission fraction.
pub fn db_to_linear(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

pub fn linear_to_db(transmission: f64) -> f64 {
    -10.0 * transmission.log10()
}

/// Relative (1σ) uncertainty of a transmission whose loss is known to ±`sigma_db`.
pub fn db_uncertainty_to_relative(sigma_db: f64) -> f64 {
    std::f64::consts::LN_10 / 10.0 * sigma_db
}
