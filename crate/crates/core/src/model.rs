//! Analytic spectral models: thermal (Bose–Einstein) inelastic scattering,
//! four-wave-mixing pair generation and the tabulated filtering-line channel.
//!
//! Detuning is always ν = ν_scattered − ν_pump in Hz. Stokes light sits at
//! negative detuning and carries the spontaneous-emission `+1` on top of the
//! thermal occupancy.

use crate::quadrature::{integrate_band, QuadratureError};
use crate::spectrum::{SpectralBand, SpectrumError, TabulatedSpectrum, DEFAULT_GUARD_HZ};
use crate::units::{self, CONSTANTS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("zero detuning is outside the domain of the thermal models")]
    ZeroDetuning,
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter { field, reason: reason.into() }
}

/// Waveguide geometry and material response, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideParams {
    /// m
    pub length: f64,
    /// s²/m, signed
    pub beta2: f64,
    /// W⁻¹m⁻¹
    pub gamma: f64,
    /// m⁻¹Hz⁻¹
    pub kappa: f64,
    /// K
    pub temperature: f64,
    /// dB
    pub propagation_loss_db: f64,
    pub coupling_loss_in_db: f64,
    pub coupling_loss_out_db: f64,
}

impl Default for WaveguideParams {
    /// The 11.2 mm, 500×220 nm wire characterised in the experiments.
    fn default() -> Self {
        Self {
            length: 11.2e-3,
            beta2: -1.5 * units::PS2_PER_M,
            gamma: 300.0,
            kappa: units::kappa_from_per_cm_per_thz(3.5e-10),
            temperature: 300.0,
            propagation_loss_db: 2.5,
            coupling_loss_in_db: 6.0,
            coupling_loss_out_db: 6.0,
        }
    }
}

impl WaveguideParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid("length", "must be > 0"));
        }
        if !self.beta2.is_finite() {
            return Err(invalid("beta2", "must be finite"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be >= 0"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(invalid("kappa", "must be >= 0"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", "must be > 0"));
        }
        for (field, v) in [
            ("propagation_loss_db", self.propagation_loss_db),
            ("coupling_loss_in_db", self.coupling_loss_in_db),
            ("coupling_loss_out_db", self.coupling_loss_out_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
}

/// Time dependence of the pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PumpEnvelope {
    Cw,
    /// Trapezoidal pulse: linear edges with the given 10–90 % time,
    /// `duration` measured at half maximum, first edge starting at t = 0.
    SquarePulse {
        duration: f64,
        rep_rate: f64,
        rise_fall: f64,
    },
}

impl PumpEnvelope {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let PumpEnvelope::SquarePulse { duration, rep_rate, rise_fall } = *self {
            if !(duration > 0.0 && rep_rate > 0.0 && rise_fall >= 0.0) {
                return Err(invalid("envelope", "pulse duration, rate must be > 0 and rise/fall >= 0"));
            }
            if duration * rep_rate >= 1.0 {
                return Err(invalid("envelope", "duration × repetition rate must be < 1"));
            }
            if duration + self.ramp() > 1.0 / rep_rate {
                return Err(invalid("envelope", "pulse edges overlap the next period"));
            }
            if self.ramp() > duration {
                return Err(invalid("envelope", "edges longer than the pulse"));
            }
        }
        Ok(())
    }

    /// Full 0–100 % edge length.
    pub fn ramp(&self) -> f64 {
        match *self {
            PumpEnvelope::Cw => 0.0,
            PumpEnvelope::SquarePulse { rise_fall, .. } => rise_fall / 0.8,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            PumpEnvelope::Cw => None,
            PumpEnvelope::SquarePulse { rep_rate, .. } => Some(1.0 / rep_rate),
        }
    }

    /// Relative power in [0, 1] at time `t`.
    pub fn shape(&self, t: f64) -> f64 {
        match *self {
            PumpEnvelope::Cw => 1.0,
            PumpEnvelope::SquarePulse { duration, rep_rate, .. } => {
                let period = 1.0 / rep_rate;
                let tau = t.rem_euclid(period);
                let ramp = self.ramp();
                if ramp == 0.0 {
                    return if tau < duration { 1.0 } else { 0.0 };
                }
                // half-maximum points at ramp/2 and duration + ramp/2
                let fall_start = duration;
                if tau < ramp {
                    tau / ramp
                } else if tau < fall_start {
                    1.0
                } else if tau < fall_start + ramp {
                    1.0 - (tau - fall_start) / ramp
                } else {
                    0.0
                }
            }
        }
    }

    /// Mean of `shape(t)^power` over a period.
    pub fn mean_shape_power(&self, power: i32) -> f64 {
        match *self {
            PumpEnvelope::Cw => 1.0,
            PumpEnvelope::SquarePulse { duration, rep_rate, .. } => {
                // plateau plus two linear ramps: ∫₀¹ s^p ds = 1/(p+1)
                let ramp = self.ramp();
                let plateau = duration - ramp;
                (plateau + 2.0 * ramp / (power as f64 + 1.0)) * rep_rate
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// m
    pub carrier_wavelength: f64,
    /// W in the waveguide (peak power for pulses)
    pub power: f64,
    pub envelope: PumpEnvelope,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self { carrier_wavelength: 1539.8 * units::NM, power: 1.25e-3, envelope: PumpEnvelope::Cw }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.carrier_wavelength > 0.0 && self.carrier_wavelength.is_finite()) {
            return Err(invalid("carrier_wavelength", "must be > 0"));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(invalid("power", "must be >= 0"));
        }
        self.envelope.validate()
    }

    pub fn carrier_frequency(&self) -> f64 {
        units::CONSTANTS.light_speed / self.carrier_wavelength
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }
}

fn check_detuning(detuning: f64) -> Result<(), ModelError> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(ModelError::ZeroDetuning);
    }
    Ok(())
}

fn check_temperature(temperature: f64) -> Result<(), ModelError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(invalid("temperature", "must be > 0"));
    }
    Ok(())
}

/// x = h|ν| / k_B T
pub fn reduced_energy(detuning: f64, temperature: f64) -> f64 {
    CONSTANTS.planck * detuning.abs() / (CONSTANTS.boltzmann * temperature)
}

/// Mean thermal occupancy 1/(exp(h|ν|/k_B T) − 1).
pub fn bose_einstein_occupancy(detuning: f64, temperature: f64) -> Result<f64, ModelError> {
    check_detuning(detuning)?;
    check_temperature(temperature)?;
    Ok(1.0 / reduced_energy(detuning, temperature).exp_m1())
}

/// High-temperature limit k_B T/(h|ν|).
pub fn rayleigh_jeans_occupancy(detuning: f64, temperature: f64) -> Result<f64, ModelError> {
    check_detuning(detuning)?;
    check_temperature(temperature)?;
    Ok(1.0 / reduced_energy(detuning, temperature))
}

/// 1 on the Stokes side (ν < 0), 0 on the anti-Stokes side.
pub fn spontaneous_term(detuning: f64) -> f64 {
    if detuning < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Scattered power per unit bandwidth, W/Hz: κ·[n(|ν|,T) + s]·L·P.
pub fn thermal_scatter_power_density(detuning: f64, wg: &WaveguideParams, power: f64) -> Result<f64, ModelError> {
    if !(power >= 0.0) {
        return Err(invalid("power", "must be >= 0"));
    }
    let n = bose_einstein_occupancy(detuning, wg.temperature)?;
    Ok(wg.kappa * (n + spontaneous_term(detuning)) * wg.length * power)
}

/// Scattered photon flux per unit bandwidth, s⁻¹Hz⁻¹.
pub fn thermal_scatter_flux_density(
    detuning: f64,
    wg: &WaveguideParams,
    power: f64,
    pump_carrier: f64,
) -> Result<f64, ModelError> {
    let p = thermal_scatter_power_density(detuning, wg, power)?;
    Ok(p / units::photon_energy(pump_carrier + detuning))
}

/// Phase-mismatch argument squared, x² = β₂(2πν)²L²(β₂(2πν)²/4 + γP).
/// Negative values continue sinc onto the imaginary axis.
pub fn sinc_argument_squared(detuning: f64, beta2: f64, length: f64, gamma_power: f64) -> f64 {
    let w2 = (std::f64::consts::TAU * detuning).powi(2);
    beta2 * w2 * length * length * (beta2 * w2 / 4.0 + gamma_power)
}

const SERIES_RADIUS: f64 = 1.0;

/// sinc²(√u) for real u, continued as sinh²(√−u)/(−u) for u < 0.
pub fn sinc_squared(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        // Σ_{k≥1} (−1)^{k+1} 2^{2k−1} u^{k−1} / (2k)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 2..=14 {
            let k = k as f64;
            term *= -4.0 * u / ((2.0 * k) * (2.0 * k - 1.0));
            sum += term;
        }
        sum
    } else if u > 0.0 {
        let x = u.sqrt();
        x.sin().powi(2) / u
    } else {
        let y = (-u).sqrt();
        y.sinh().powi(2) / -u
    }
}

/// d/du of [`sinc_squared`].
pub fn sinc_squared_derivative(u: f64) -> f64 {
    if u.abs() < SERIES_RADIUS {
        // termwise derivative of the series above
        let mut coeff = 1.0;
        let mut power = 1.0;
        let mut sum = 0.0;
        for k in 2..=15 {
            let kf = k as f64;
            coeff *= -4.0 / ((2.0 * kf) * (2.0 * kf - 1.0));
            sum += coeff * (kf - 1.0) * power;
            power *= u;
        }
        sum
    } else if u > 0.0 {
        let x = u.sqrt();
        (x * x.sin() * x.cos() - x.sin().powi(2)) / (u * u)
    } else {
        let y = (-u).sqrt();
        -y.sinh() * (y * y.cosh() - y.sinh()) / y.powi(4)
    }
}

/// Smallest |ν| where the pair spectrum vanishes (x² = π²), or `None`
/// without dispersion.
pub fn pair_spectrum_first_zero(wg: &WaveguideParams, power: f64) -> Option<f64> {
    if wg.beta2 == 0.0 {
        return None;
    }
    // x² = a·y² + b·y in y = (2πν)²
    let l2 = wg.length * wg.length;
    let a = wg.beta2 * wg.beta2 * l2 / 4.0;
    let b = wg.beta2 * l2 * wg.gamma * power;
    let pi2 = std::f64::consts::PI.powi(2);
    let root = (b * b + 4.0 * a * pi2).sqrt();
    let y = if b >= 0.0 { 2.0 * pi2 / (root + b) } else { (root - b) / (2.0 * a) };
    Some(y.sqrt() / std::f64::consts::TAU)
}

/// Pair emission rate per unit detuning, |γPL·sinc(x)|².
pub fn pair_flux_density(detuning: f64, wg: &WaveguideParams, power: f64) -> f64 {
    let amplitude = wg.gamma * power * wg.length;
    let u = sinc_argument_squared(detuning, wg.beta2, wg.length, wg.gamma * power);
    amplitude * amplitude * sinc_squared(u)
}

/// Tabulated filtering-line density scaled linearly from its reference power.
pub fn raman_fiber_noise_density(detuning: f64, table: &TabulatedSpectrum, power: f64) -> Result<f64, ModelError> {
    if !(power >= 0.0) {
        return Err(invalid("power", "must be >= 0"));
    }
    Ok(table.interpolate(detuning)? * power / table.reference_power())
}

/// Band flux split into the part linear in pump power (thermal scattering)
/// and the quadratic part (one photon per generated pair).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxDecomposition {
    /// s⁻¹
    pub linear: f64,
    /// s⁻¹
    pub quadratic: f64,
}

impl FluxDecomposition {
    pub fn total(&self) -> f64 {
        self.linear + self.quadratic
    }

    pub fn linear_fraction(&self) -> f64 {
        self.linear / self.total()
    }
}

/// Integrated thermal and pair flux in `band` at pump power `power`.
pub fn total_flux_model(
    power: f64,
    wg: &WaveguideParams,
    pump_carrier: f64,
    band: &SpectralBand,
) -> Result<FluxDecomposition, ModelError> {
    if !(power >= 0.0) {
        return Err(invalid("power", "must be >= 0"));
    }
    if power == 0.0 {
        return Ok(FluxDecomposition { linear: 0.0, quadratic: 0.0 });
    }
    let linear =
        integrate_band(|nu| thermal_scatter_flux_density(nu, wg, power, pump_carrier), band, DEFAULT_GUARD_HZ)?;
    let quadratic = integrate_band::<ModelError, _>(|nu| Ok(pair_flux_density(nu, wg, power)), band, DEFAULT_GUARD_HZ)?;
    Ok(FluxDecomposition { linear, quadratic })
}

/// Coefficients (a, b) of Φ = aP² + bP for a band. The pair term is
/// quadratic only up to the γP inside the phase mismatch, so `a` is taken
/// at the reference power.
pub fn power_coefficients(
    wg: &WaveguideParams,
    pump_carrier: f64,
    band: &SpectralBand,
    reference_power: f64,
) -> Result<(f64, f64), ModelError> {
    let d = total_flux_model(reference_power, wg, pump_carrier, band)?;
    Ok((d.quadratic / reference_power.powi(2), d.linear / reference_power))
}
