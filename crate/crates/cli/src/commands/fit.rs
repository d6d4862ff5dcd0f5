use super::{CliError, KappaValue};
use crate::config::{FitModelName, RunConfig};
use crate::output::RunOutput;
use serde::Serialize;
use serde_json::json;
use siscatter::fitting::{
    fit_bose_einstein, fit_linear_temperature, fit_power_decomposition, fit_sinc_spectrum, BoseEinsteinModel,
    BoseEinsteinSetup, Dataset, FitModel, FitResult, Fixed, LinearModel, PowerModel, SincModel,
};
use siscatter::units::kappa_from_per_cm_per_thz;

#[derive(Serialize)]
struct ResidualRow {
    x: f64,
    y: f64,
    sigma: f64,
    fitted: f64,
    normalized_residual: f64,
}

pub fn fit(config: &RunConfig, out: &mut RunOutput) -> Result<serde_json::Value, CliError> {
    let f = &config.fit;
    let model = f.model.ok_or_else(|| CliError::Config("fit.model: required (or pass --model)".into()))?;
    let path = f.data.as_ref().ok_or_else(|| CliError::Config("fit.data: required (or pass --data)".into()))?;
    let data =
        Dataset::from_csv_path(path).map_err(|e| CliError::Config(format!("fit.data: {}: {e}", path.display())))?;
    let r = config.resolve()?;
    let fixed = Fixed {
        kappa: f.fixed_kappa_per_cm_per_thz.map(kappa_from_per_cm_per_thz),
        temperature: f.fixed_temperature_k,
    };
    let be = BoseEinsteinModel {
        length: r.wg.length,
        power: r.pump.power,
        pump_carrier: r.pump.carrier_frequency(),
        scale: f.scale,
        fixed_kappa: fixed.kappa,
        fixed_temperature: fixed.temperature,
    };
    let sinc = SincModel { length: r.wg.length };
    let (result, curve): (FitResult, &dyn FitModel) = match model {
        FitModelName::Power => (fit_power_decomposition(&data)?, &PowerModel),
        FitModelName::Linear => (fit_linear_temperature(&data)?, &LinearModel),
        FitModelName::Sinc => (fit_sinc_spectrum(&data, r.wg.length)?, &sinc),
        FitModelName::BoseEinstein => {
            let setup = BoseEinsteinSetup {
                length: be.length,
                power: be.power,
                pump_carrier: be.pump_carrier,
                scale: be.scale,
            };
            (fit_bose_einstein(&data, setup, fixed)?, &be)
        }
    };
    let mut rows = Vec::with_capacity(data.len());
    for p in data.points() {
        let fitted = curve.value(p.x, &result.params)?;
        rows.push(ResidualRow {
            x: p.x,
            y: p.y,
            sigma: p.sigma,
            fitted,
            normalized_residual: (p.y - fitted) / p.sigma,
        });
    }
    out.write_csv("fit_residuals.csv", &rows)?;
    let mut text = serde_json::to_string_pretty(&result).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    out.write("fit.json", text.as_bytes())?;
    let kappa = result.param("kappa").map(KappaValue::new);
    Ok(json!({
        "model": model,
        "data": path,
        "points": data.len(),
        "result": result,
        "kappa": kappa,
    }))
}
