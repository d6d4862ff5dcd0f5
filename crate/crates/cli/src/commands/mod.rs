//! One function per subcommand. Each writes its artifacts through
//! [`RunOutput`] and returns the command-specific part of the report.

mod fit;
mod montecarlo;
mod spectrum;
mod sweeps;
mod timetrace;

pub use fit::fit;
pub use montecarlo::montecarlo;
pub use spectrum::spectrum;
pub use sweeps::{power_sweep, temp_sweep};
pub use timetrace::timetrace;

use crate::output::RunOutput;
use crate::CliError;
use serde::Serialize;
use siscatter::fitting::Dataset;
use siscatter::units::kappa_to_per_cm_per_thz;

fn to_json(value: impl Serialize) -> serde_json::Value {
    serde_json::to_value(value).expect("report values serialize")
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn write_dataset(out: &mut RunOutput, name: &str, data: &Dataset) -> Result<(), CliError> {
    out.write_with(name, |buf| data.write_csv(buf))
}

/// κ in both SI and cm⁻¹THz⁻¹.
#[derive(Serialize)]
struct KappaValue {
    per_m_per_hz: f64,
    per_cm_per_thz: f64,
}

impl KappaValue {
    fn new(kappa: f64) -> Self {
        Self { per_m_per_hz: kappa, per_cm_per_thz: kappa_to_per_cm_per_thz(kappa) }
    }
}
