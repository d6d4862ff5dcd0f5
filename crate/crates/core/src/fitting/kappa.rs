use super::solver::FitResult;
use super::FitError;
use crate::instrument::{Channel, Instrument};
use crate::model::{self, ModelError, WaveguideParams};
use crate::quadrature::integrate_band;
use crate::spectrum::{SpectralBand, TabulatedSpectrum, DEFAULT_GUARD_HZ};
use crate::units::db_uncertainty_to_relative;
use serde::Serialize;

/// Linearized detection rate (dark-subtracted, saturation-corrected,
/// η·duty·Φ) of one channel as a function of pump power.
#[derive(Debug, Clone)]
pub struct ChannelResponse {
    pub wg: WaveguideParams,
    pub pump_carrier: f64,
    pub band: SpectralBand,
    pub channel: Channel,
    pub instrument: Instrument,
    /// rate per W per unit κ
    pub thermal_per_kappa: f64,
    /// rate per W
    pub raman_per_watt: f64,
}

impl ChannelResponse {
    pub fn new(
        wg: &WaveguideParams,
        pump_carrier: f64,
        band: &SpectralBand,
        channel: Channel,
        instrument: &Instrument,
        raman: Option<&TabulatedSpectrum>,
    ) -> Result<Self, FitError> {
        wg.validate()?;
        band.validate_guard(DEFAULT_GUARD_HZ).map_err(ModelError::from)?;
        let det = instrument.detector(channel);
        let gain = det.efficiency * det.duty_cycle();
        let t = |nu: f64| instrument.transmission(channel, nu, pump_carrier);
        let unit = wg.with_kappa(1.0);
        let thermal = integrate_band(
            |nu| Ok::<_, ModelError>(model::thermal_scatter_flux_density(nu, &unit, 1.0, pump_carrier)? * t(nu)),
            band,
            DEFAULT_GUARD_HZ,
        )?;
        let raman_rate = match raman {
            Some(table) => integrate_band(
                |nu| Ok::<_, ModelError>(model::raman_fiber_noise_density(nu, table, 1.0)? * t(nu)),
                band,
                DEFAULT_GUARD_HZ,
            )?,
            None => 0.0,
        };
        Ok(Self {
            wg: *wg,
            pump_carrier,
            band: *band,
            channel,
            instrument: instrument.clone(),
            thermal_per_kappa: gain * thermal,
            raman_per_watt: gain * raman_rate,
        })
    }

    /// Coefficient b of the linear term for the waveguide's κ.
    pub fn linear_coefficient(&self) -> f64 {
        self.wg.kappa * self.thermal_per_kappa + self.raman_per_watt
    }

    /// Pair photons detected in this channel per second.
    pub fn pair_rate(&self, power: f64) -> Result<f64, FitError> {
        if power == 0.0 {
            return Ok(0.0);
        }
        let det = self.instrument.detector(self.channel);
        // the pair spectrum is symmetric, so the band's own density applies
        let rate = integrate_band(
            |nu| {
                Ok::<_, ModelError>(
                    model::pair_flux_density(nu, &self.wg, power)
                        * self.instrument.transmission(self.channel, nu, self.pump_carrier),
                )
            },
            &self.band,
            DEFAULT_GUARD_HZ,
        )?;
        Ok(det.efficiency * det.duty_cycle() * rate)
    }

    /// η·duty·Φ at pump power `power`.
    pub fn signal_rate(&self, power: f64) -> Result<f64, FitError> {
        Ok(self.linear_coefficient() * power + self.pair_rate(power)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyTerm {
    pub label: String,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaEstimate {
    /// m⁻¹Hz⁻¹
    pub kappa: f64,
    pub sigma: f64,
    pub relative_sigma: f64,
    pub contributions: Vec<UncertaintyTerm>,
}

/// Inverts the fitted linear coefficient `b` (linearized detected rate per
/// W) for κ. Uncertainties from the fit, each loss-budget element, the
/// input coupling (power calibration) and the detector efficiency are added
/// in quadrature.
pub fn extract_kappa(
    power_fit: &FitResult,
    response: &ChannelResponse,
    input_coupling_uncertainty_db: f64,
) -> Result<KappaEstimate, FitError> {
    if !power_fit.converged {
        return Err(FitError::UnconvergedInput);
    }
    let (Some(b), Some(sigma_b)) = (power_fit.param("b"), power_fit.sigma("b")) else {
        return Err(FitError::Data("power fit has no parameter b".into()));
    };
    if !(response.thermal_per_kappa > 0.0) {
        return Err(FitError::Data("channel has no thermal response".into()));
    }
    let thermal_b = b - response.raman_per_watt;
    let kappa = thermal_b / response.thermal_per_kappa;
    let mut contributions = vec![UncertaintyTerm { label: "power fit".into(), relative: sigma_b / thermal_b.abs() }];
    for e in &response.instrument.budget.elements {
        contributions
            .push(UncertaintyTerm { label: e.label.clone(), relative: db_uncertainty_to_relative(e.uncertainty_db) });
    }
    contributions.push(UncertaintyTerm {
        label: "input coupling".into(),
        relative: db_uncertainty_to_relative(input_coupling_uncertainty_db),
    });
    let det = response.instrument.detector(response.channel);
    contributions.push(UncertaintyTerm {
        label: "detector efficiency".into(),
        relative: det.efficiency_uncertainty / det.efficiency,
    });
    let relative_sigma = contributions.iter().map(|c| c.relative * c.relative).sum::<f64>().sqrt();
    Ok(KappaEstimate { kappa, sigma: relative_sigma * kappa.abs(), relative_sigma, contributions })
}
