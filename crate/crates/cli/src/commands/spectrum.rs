use super::{linspace, to_json, CliError};
use crate::config::{RunConfig, SweepVariable};
use crate::output::RunOutput;
use serde::Serialize;
use serde_json::json;
use siscatter::event_sim::EventModel;
use siscatter::instrument::detected_rate;
use siscatter::model::{
    pair_flux_density, pair_spectrum_first_zero, raman_fiber_noise_density, thermal_scatter_flux_density,
    total_flux_model,
};
use siscatter::quadrature::integrate_band;
use siscatter::spectrum::DEFAULT_GUARD_HZ;
use siscatter::units::{frequency_to_wavelength, linear_to_db, NM, THZ};
use siscatter::{Channel, ModelError, TabulatedSpectrum};

/// Densities in photons s⁻¹ Hz⁻¹, emitted and at the detector input.
#[derive(Serialize)]
struct Row {
    detuning_thz: f64,
    wavelength_nm: f64,
    transmission: f64,
    thermal: f64,
    pair: f64,
    raman: f64,
    total: f64,
    thermal_at_detector: f64,
    pair_at_detector: f64,
    raman_at_detector: f64,
    total_at_detector: f64,
}

fn raman_at(table: Option<&TabulatedSpectrum>, nu: f64, power: f64) -> Result<f64, ModelError> {
    match table {
        Some(t) if (t.support().0..=t.support().1).contains(&nu) => raman_fiber_noise_density(nu, t, power),
        _ => Ok(0.0),
    }
}

pub fn spectrum(config: &RunConfig, out: &mut RunOutput) -> Result<serde_json::Value, CliError> {
    let r = config.resolve()?;
    let carrier = r.pump.carrier_frequency();
    let power = r.pump.power;
    let sweep = config.sweep_grid(SweepVariable::Detuning, Vec::new());
    let model = EventModel::new(&r.wg, &r.pump, &r.bands, &r.instrument, r.raman.as_ref())?;
    let mut channels = serde_json::Map::new();
    for (k, ch) in Channel::BOTH.into_iter().enumerate() {
        let band = r.bands.get(ch);
        let grid: Vec<f64> = if sweep.is_empty() {
            // from just outside the guard to 20 % beyond the band, pump block included
            let outer = band.detuning_min.abs().max(band.detuning_max.abs()) * 1.2;
            let inner = 2.0 * DEFAULT_GUARD_HZ;
            let mut g = linspace(inner, outer, config.simulation.spectrum_points);
            if ch == Channel::Stokes {
                g = g.into_iter().rev().map(|v| -v).collect();
            }
            g
        } else {
            sweep.iter().map(|v| v * THZ).filter(|v| v.signum() == ch.sign()).collect()
        };
        let mut rows = Vec::with_capacity(grid.len());
        for &nu in &grid {
            let t = r.instrument.transmission(ch, nu, carrier);
            let thermal = thermal_scatter_flux_density(nu, &r.wg, power, carrier)?;
            let pair = pair_flux_density(nu, &r.wg, power);
            let raman = raman_at(r.raman.as_ref(), nu, power)?;
            let total = thermal + pair + raman;
            rows.push(Row {
                detuning_thz: nu / THZ,
                wavelength_nm: frequency_to_wavelength(carrier + nu)
                    .map_err(|e| CliError::Config(format!("detuning {nu} Hz: {e}")))?
                    / NM,
                transmission: t,
                thermal,
                pair,
                raman,
                total,
                thermal_at_detector: thermal * t,
                pair_at_detector: pair * t,
                raman_at_detector: raman * t,
                total_at_detector: total * t,
            });
        }
        let file = format!("spectrum_{}.csv", ch.label());
        out.write_csv(&file, &rows)?;

        let emitted = total_flux_model(power, &r.wg, carrier, band)?;
        let raman_emitted = match &r.raman {
            Some(table) => integrate_band(|nu| raman_fiber_noise_density(nu, table, power), band, DEFAULT_GUARD_HZ)?,
            None => 0.0,
        };
        let det = r.instrument.detector(ch);
        channels.insert(
            ch.label().into(),
            json!({
                "file": file,
                "band_thz": [band.detuning_min / THZ, band.detuning_max / THZ],
                "emitted_flux": {
                    "thermal": emitted.linear,
                    "pair": emitted.quadratic,
                    "raman": raman_emitted,
                    "total": emitted.total() + raman_emitted,
                },
                "flux_at_detector": {
                    "thermal": model.thermal_incident[k],
                    "pair": model.pair_incident[k],
                    "raman": model.raman_incident[k],
                },
                "detected_rate": detected_rate(model.mean_incident(ch), det),
                "dark_rate": det.dark_rate,
                "pump_suppression_db": linear_to_db(r.instrument.transmission(ch, 0.0, carrier)),
            }),
        );
    }
    Ok(json!({
        "units": {"density": "photons/s/Hz", "flux": "photons/s", "rate": "counts/s"},
        "pump_power_w": power,
        "pair_first_zero_thz": pair_spectrum_first_zero(&r.wg, power).map(|v| v / THZ),
        "channels": to_json(channels),
    }))
}
