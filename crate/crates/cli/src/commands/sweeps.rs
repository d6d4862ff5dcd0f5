use super::{linspace, to_json, write_dataset, CliError, KappaValue};
use crate::config::{RunConfig, SweepVariable};
use crate::output::RunOutput;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use serde_json::json;
use siscatter::event_sim::rng_for;
use siscatter::fitting::{
    extract_kappa, fit_linear_temperature, fit_power_decomposition, ChannelResponse, Dataset, FitModel, LinearModel,
};
use siscatter::instrument::{detected_rate, linearized_signal_rate};
use siscatter::model::{power_coefficients, raman_fiber_noise_density, total_flux_model};
use siscatter::quadrature::integrate_band;
use siscatter::spectrum::DEFAULT_GUARD_HZ;
use siscatter::units::MW;
use siscatter::{Channel, ModelError, SpectralBand, TabulatedSpectrum};

/// Relative σ given to noiseless model values so they can be fitted.
const MODEL_SIGMA: f64 = 1e-3;

fn raman_flux(table: Option<&TabulatedSpectrum>, band: &SpectralBand, power: f64) -> Result<f64, ModelError> {
    match table {
        Some(t) if power > 0.0 => integrate_band(|nu| raman_fiber_noise_density(nu, t, power), band, DEFAULT_GUARD_HZ),
        _ => Ok(0.0),
    }
}

#[derive(Serialize)]
struct PowerRow {
    power_mw: f64,
    channel: &'static str,
    thermal_flux: f64,
    pair_flux: f64,
    raman_flux: f64,
    total_flux: f64,
    linear_fraction: f64,
    /// dark-subtracted, saturation-corrected η·duty·Φ
    signal_rate: f64,
    observed_rate: f64,
    dark_rate: f64,
}

pub fn power_sweep(config: &RunConfig, out: &mut RunOutput) -> Result<serde_json::Value, CliError> {
    let r = config.resolve()?;
    let carrier = r.pump.carrier_frequency();
    let grid_mw = config.sweep_grid(SweepVariable::Power, linspace(0.25, 2.5, 10));
    let noise = config.simulation.noise_fraction;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::new();
    let mut channels = serde_json::Map::new();
    for (k, ch) in Channel::BOTH.into_iter().enumerate() {
        let band = r.bands.get(ch);
        let det = *r.instrument.detector(ch);
        let response = ChannelResponse::new(&r.wg, carrier, band, ch, &r.instrument, r.raman.as_ref())?;
        let gain = det.efficiency * det.duty_cycle();
        let mut rng = rng_for(config.simulation.seed, k as u64);
        let (mut emitted, mut detected) = (Vec::new(), Vec::new());
        for &p_mw in &grid_mw {
            let p = p_mw * MW;
            let d = total_flux_model(p, &r.wg, carrier, band)?;
            let raman = raman_flux(r.raman.as_ref(), band, p)?;
            let total = d.total() + raman;
            let clean = detected_rate(response.signal_rate(p)? / gain, &det);
            let observed = (clean * (1.0 + noise * unit.sample(&mut rng))).clamp(0.0, det.gate_rate * (1.0 - 1e-12));
            let signal = linearized_signal_rate(observed, &det)
                .ok_or_else(|| CliError::Numerical(format!("{} detector saturated at {p_mw} mW", ch.label())))?;
            rows.push(PowerRow {
                power_mw: p_mw,
                channel: ch.label(),
                thermal_flux: d.linear,
                pair_flux: d.quadratic,
                raman_flux: raman,
                total_flux: total,
                linear_fraction: if total > 0.0 { (d.linear + raman) / total } else { f64::NAN },
                signal_rate: signal,
                observed_rate: observed,
                dark_rate: det.dark_rate,
            });
            if p > 0.0 {
                emitted.push((p, total, MODEL_SIGMA * total));
                let sigma = if noise > 0.0 {
                    noise * observed / (1.0 - observed / det.gate_rate)
                } else {
                    MODEL_SIGMA * signal.abs()
                };
                detected.push((p, signal, sigma.max(f64::MIN_POSITIVE)));
            }
        }
        let dataset = |pts: &[(f64, f64, f64)]| {
            let (x, (y, s)): (Vec<f64>, (Vec<f64>, Vec<f64>)) = pts.iter().map(|&(x, y, s)| (x, (y, s))).unzip();
            Dataset::from_xys(&x, &y, &s)
        };
        let emitted = dataset(&emitted)?;
        let detected = dataset(&detected)?;
        let emitted_file = format!("power_emitted_{}.csv", ch.label());
        let detected_file = format!("power_detected_{}.csv", ch.label());
        write_dataset(out, &emitted_file, &emitted)?;
        write_dataset(out, &detected_file, &detected)?;

        let emitted_fit = fit_power_decomposition(&emitted)?;
        let reference = grid_mw.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE) * MW;
        let (a_model, b_model) = power_coefficients(&r.wg, carrier, band, reference)?;
        let b_model = b_model + raman_flux(r.raman.as_ref(), band, reference)? / reference;
        let detected_fit = fit_power_decomposition(&detected)?;
        let kappa = extract_kappa(&detected_fit, &response, config.losses.coupling_in_uncertainty_db)?;
        channels.insert(
            ch.label().into(),
            json!({
                "emitted_fit": emitted_fit,
                "emitted_model": {"a": a_model, "b": b_model, "reference_power_w": reference},
                "detected_fit": detected_fit,
                "kappa": KappaValue::new(kappa.kappa),
                "kappa_sigma": KappaValue::new(kappa.sigma),
                "kappa_relative_sigma": kappa.relative_sigma,
                "kappa_contributions": kappa.contributions,
                "dark_rate": det.dark_rate,
                "files": [emitted_file, detected_file],
            }),
        );
    }
    out.write_csv("power_sweep.csv", &rows)?;
    Ok(json!({
        "units": {"power": "W (fits), mW (table)", "flux": "photons/s", "rate": "counts/s"},
        "noise_fraction": noise,
        "channels": to_json(channels),
    }))
}

#[derive(Serialize)]
struct TempRow {
    temperature_k: f64,
    channel: &'static str,
    thermal_flux: f64,
    pair_flux: f64,
    raman_flux: f64,
    total_flux: f64,
    signal_rate: f64,
}

pub fn temp_sweep(config: &RunConfig, out: &mut RunOutput) -> Result<serde_json::Value, CliError> {
    let r = config.resolve()?;
    let carrier = r.pump.carrier_frequency();
    let power = r.pump.power;
    let grid = config.sweep_grid(SweepVariable::Temperature, linspace(300.0, 575.0, 12));
    let mut rows = Vec::new();
    let mut channels = serde_json::Map::new();
    for ch in Channel::BOTH {
        let band = r.bands.get(ch);
        let raman = raman_flux(r.raman.as_ref(), band, power)?;
        let mut pts = Vec::new();
        for &t in &grid {
            let wg = r.wg.with_temperature(t);
            let d = total_flux_model(power, &wg, carrier, band)?;
            let response = ChannelResponse::new(&wg, carrier, band, ch, &r.instrument, r.raman.as_ref())?;
            let total = d.total() + raman;
            rows.push(TempRow {
                temperature_k: t,
                channel: ch.label(),
                thermal_flux: d.linear,
                pair_flux: d.quadratic,
                raman_flux: raman,
                total_flux: total,
                signal_rate: response.signal_rate(power)?,
            });
            pts.push((t, total));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let sigmas: Vec<f64> = ys.iter().map(|y| (MODEL_SIGMA * y).max(f64::MIN_POSITIVE)).collect();
        let data = Dataset::from_xys(&xs, &ys, &sigmas)?;
        let file = format!("temp_{}.csv", ch.label());
        write_dataset(out, &file, &data)?;
        let fit = fit_linear_temperature(&data)?;
        let mut curvature: f64 = 0.0;
        for (&x, &y) in xs.iter().zip(&ys) {
            if y > 0.0 {
                curvature = curvature.max(((y - LinearModel.value(x, &fit.params)?) / y).abs());
            }
        }
        channels.insert(ch.label().into(), json!({ "fit": fit, "max_relative_residual": curvature, "file": file }));
    }
    out.write_csv("temp_sweep.csv", &rows)?;
    Ok(json!({
        "units": {"temperature": "K", "flux": "photons/s", "rate": "counts/s"},
        "pump_power_w": power,
        "channels": to_json(channels),
    }))
}
