//! Run configuration in laboratory units (mm, nm, THz, mW, ns, ...).
//!
//! Every field has a default, so an empty file describes the reference
//! setup. Values are converted to SI only in [`RunConfig::resolve`].

use crate::CliError;
use serde::{Deserialize, Serialize};
use siscatter::event_sim::CarrierGeneration;
use siscatter::instrument::{FilterElement, FilterKind, LossBudget};
use siscatter::spectrum::DEFAULT_GUARD_HZ;
use siscatter::units::{kappa_from_per_cm_per_thz, MW, NM, PS2_PER_M, THZ};
use siscatter::{
    BandPair, DetectorParams, Instrument, PumpConfig, PumpEnvelope, SpectralBand, TabulatedSpectrum, WaveguideParams,
};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub waveguide: WaveguideSection,
    pub pump: PumpSection,
    pub bands: BandsSection,
    pub losses: LossSection,
    pub filters: FilterSection,
    pub detectors: DetectorSection,
    pub simulation: SimulationSection,
    pub timetrace: TimetraceSection,
    pub fit: FitSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raman: Option<RamanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveguideSection {
    pub length_mm: f64,
    pub beta2_ps2_per_m: f64,
    pub gamma_per_w_per_m: f64,
    pub kappa_per_cm_per_thz: f64,
    pub temperature_k: f64,
    pub propagation_loss_db: f64,
    pub coupling_loss_in_db: f64,
    pub coupling_loss_out_db: f64,
}

impl Default for WaveguideSection {
    fn default() -> Self {
        Self {
            length_mm: 11.2,
            beta2_ps2_per_m: -1.5,
            gamma_per_w_per_m: 300.0,
            kappa_per_cm_per_thz: 3.5e-10,
            temperature_k: 300.0,
            propagation_loss_db: 2.5,
            coupling_loss_in_db: 6.0,
            coupling_loss_out_db: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeSection {
    Cw,
    Pulsed { duration_ns: f64, rep_rate_mhz: f64, rise_fall_ps: f64 },
}

impl EnvelopeSection {
    fn to_core(self) -> PumpEnvelope {
        match self {
            EnvelopeSection::Cw => PumpEnvelope::Cw,
            EnvelopeSection::Pulsed { duration_ns, rep_rate_mhz, rise_fall_ps } => PumpEnvelope::SquarePulse {
                duration: duration_ns / 1e9,
                rep_rate: rep_rate_mhz * 1e6,
                rise_fall: rise_fall_ps / 1e12,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub wavelength_nm: f64,
    /// in the waveguide; peak power for pulses
    pub power_mw: f64,
    pub envelope: EnvelopeSection,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self { wavelength_nm: 1539.8, power_mw: 1.25, envelope: EnvelopeSection::Cw }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandsSection {
    /// [min, max] signed detuning
    pub stokes_thz: [f64; 2],
    pub anti_stokes_thz: [f64; 2],
    /// permit a band that crosses zero detuning (the guard interval is skipped)
    pub allow_zero_crossing: bool,
}

impl Default for BandsSection {
    fn default() -> Self {
        Self { stokes_thz: [-2.5, -0.4], anti_stokes_thz: [0.4, 2.5], allow_zero_crossing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossEntry {
    pub label: String,
    pub loss_db: f64,
    #[serde(default)]
    pub uncertainty_db: f64,
}

/// Losses between generation and the filters. Output coupling and
/// propagation come from the waveguide section; `extra` is appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub coupling_out_uncertainty_db: f64,
    pub propagation_uncertainty_db: f64,
    /// calibration of the in-waveguide pump power
    pub coupling_in_uncertainty_db: f64,
    pub extra: Vec<LossEntry>,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            coupling_out_uncertainty_db: 0.5,
            propagation_uncertainty_db: 0.5,
            coupling_in_uncertainty_db: 0.5,
            extra: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterEntry {
    pub kind: FilterKind,
    pub center_nm: f64,
    pub width_nm: f64,
    pub extinction_db: f64,
    #[serde(default)]
    pub insertion_loss_db: f64,
}

impl FilterEntry {
    fn to_core(self) -> FilterElement {
        FilterElement {
            kind: self.kind,
            center: self.center_nm * NM,
            width: self.width_nm * NM,
            out_of_band_extinction_db: self.extinction_db,
            insertion_loss_db: self.insertion_loss_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub stokes: Vec<FilterEntry>,
    pub anti_stokes: Vec<FilterEntry>,
}

impl Default for FilterSection {
    fn default() -> Self {
        let bandblock = FilterEntry {
            kind: FilterKind::Bandblock,
            center_nm: 1539.8,
            width_nm: 1.6,
            extinction_db: 150.0,
            insertion_loss_db: 0.0,
        };
        let demux = |center_nm| FilterEntry {
            kind: FilterKind::Demux,
            center_nm,
            width_nm: 18.0,
            extinction_db: 40.0,
            insertion_loss_db: 0.0,
        };
        Self { stokes: vec![bandblock, demux(1551.0)], anti_stokes: vec![bandblock, demux(1529.0)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorEntry {
    pub efficiency: f64,
    pub efficiency_uncertainty: f64,
    pub dark_rate_hz: f64,
    pub gate_rate_khz: f64,
    pub gate_width_ns: f64,
    pub dead_time_us: f64,
    pub jitter_ps: f64,
    /// ignore the gate settings and arm continuously (gates one dead time long)
    pub free_running: bool,
}

impl Default for DetectorEntry {
    fn default() -> Self {
        Self {
            efficiency: 0.10,
            efficiency_uncertainty: 0.01,
            dark_rate_hz: 805.0,
            gate_rate_khz: 100.0,
            gate_width_ns: 100.0,
            dead_time_us: 10.0,
            jitter_ps: 250.0,
            free_running: false,
        }
    }
}

impl DetectorEntry {
    fn to_core(self) -> DetectorParams {
        let dead_time = self.dead_time_us / 1e6;
        let jitter = self.jitter_ps / 1e12;
        if self.free_running {
            let mut d = DetectorParams::free_running(self.efficiency, self.dark_rate_hz, dead_time, jitter);
            d.efficiency_uncertainty = self.efficiency_uncertainty;
            return d;
        }
        DetectorParams {
            efficiency: self.efficiency,
            efficiency_uncertainty: self.efficiency_uncertainty,
            dark_rate: self.dark_rate_hz,
            gate_rate: self.gate_rate_khz * 1e3,
            gate_width: self.gate_width_ns / 1e9,
            dead_time,
            jitter_sigma: jitter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub stokes: DetectorEntry,
    pub anti_stokes: DetectorEntry,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            stokes: DetectorEntry::default(),
            anti_stokes: DetectorEntry { efficiency: 0.15, dark_rate_hz: 155.0, ..DetectorEntry::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub seed: u64,
    /// total Monte Carlo acquisition time, split evenly over the batches
    pub duration_s: f64,
    pub batches: usize,
    pub bin_width_ns: f64,
    pub span_ns: f64,
    /// 1σ multiplicative noise applied to synthetic sweep rates
    pub noise_fraction: f64,
    /// points per channel in `spectrum`
    pub spectrum_points: usize,
    pub write_events: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            seed: 1,
            duration_s: 20.0,
            batches: 10,
            bin_width_ns: 1.0,
            span_ns: 31.0,
            noise_fraction: 0.0,
            spectrum_points: 241,
            write_events: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimetraceSection {
    pub envelope: EnvelopeSection,
    pub powers_mw: Vec<f64>,
    pub bin_width_ps: f64,
    pub duration_s: f64,
    pub jitter_ps: f64,
    pub window_start_ns: f64,
    /// detected thermal photons per second per W of pump
    pub thermal_coefficient: f64,
    /// detected rate per unit carrier density
    pub carrier_coefficient: f64,
    pub carrier_lifetime_ns: f64,
    pub carrier_linear: f64,
    pub carrier_quadratic: f64,
}

impl Default for TimetraceSection {
    fn default() -> Self {
        Self {
            envelope: EnvelopeSection::Pulsed { duration_ns: 50.0, rep_rate_mhz: 2.0, rise_fall_ps: 450.0 },
            powers_mw: vec![0.3, 1.25, 2.5],
            bin_width_ps: 100.0,
            duration_s: 600.0,
            jitter_ps: 34.0,
            window_start_ns: -5.0,
            thermal_coefficient: 5e8,
            carrier_coefficient: 5e17,
            carrier_lifetime_ns: 1.0,
            carrier_linear: 1.0,
            carrier_quadratic: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitModelName {
    Power,
    BoseEinstein,
    Sinc,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<FitModelName>,
    /// `x,y,sigma` CSV in SI units (W, Hz, K)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Bose–Einstein: collection efficiency applied to the emitted density
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_temperature_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_kappa_per_cm_per_thz: Option<f64>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { model: None, data: None, scale: 1.0, fixed_temperature_k: None, fixed_kappa_per_cm_per_thz: None }
    }
}

/// Filtering-line noise table, `detuning_hz,flux_density_per_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanSection {
    pub table: PathBuf,
    pub reference_power_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Power,
    Temperature,
    Detuning,
}

impl SweepVariable {
    pub fn unit(self) -> &'static str {
        match self {
            SweepVariable::Power => "mW",
            SweepVariable::Temperature => "K",
            SweepVariable::Detuning => "THz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    /// in mW, K or THz
    pub grid: Vec<f64>,
}

/// The configuration converted to model types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub wg: WaveguideParams,
    pub pump: PumpConfig,
    pub bands: BandPair,
    pub instrument: Instrument,
    pub raman: Option<TabulatedSpectrum>,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{}: {}", path.into(), reason.into()))
}

fn check(ok: bool, path: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(path, reason))
    }
}

fn positive(v: f64, path: &str) -> Result<(), CliError> {
    check(v > 0.0 && v.is_finite(), path, "must be > 0")
}

fn non_negative(v: f64, path: &str) -> Result<(), CliError> {
    check(v >= 0.0 && v.is_finite(), path, "must be >= 0")
}

impl RunConfig {
    /// Parses TOML text, applies `key=value` overrides and validates.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        Self::from_table(parse_table(text)?, overrides)
    }

    fn from_table(user: toml::Table, overrides: &[String]) -> Result<Self, CliError> {
        // overrides may index into arrays the file leaves at their defaults
        let mut table = match toml::Value::try_from(RunConfig::default()) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("config serializes to a table"),
        };
        merge(&mut table, user);
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner().message()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let Some(p) = path else {
            return Self::from_toml_with("", overrides);
        };
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
        let mut user = parse_table(&text)?;
        // file paths inside a config are relative to the config itself
        let base = p.parent().unwrap_or(Path::new(""));
        for (section, key) in [("raman", "table"), ("fit", "data")] {
            if let Some(toml::Value::String(s)) = user.get_mut(section).and_then(|t| t.get_mut(key)) {
                if Path::new(s.as_str()).is_relative() {
                    *s = base.join(s.as_str()).display().to_string();
                }
            }
        }
        Self::from_table(user, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let w = &self.waveguide;
        positive(w.length_mm, "waveguide.length_mm")?;
        check(w.beta2_ps2_per_m.is_finite(), "waveguide.beta2_ps2_per_m", "must be finite")?;
        non_negative(w.gamma_per_w_per_m, "waveguide.gamma_per_w_per_m")?;
        non_negative(w.kappa_per_cm_per_thz, "waveguide.kappa_per_cm_per_thz")?;
        positive(w.temperature_k, "waveguide.temperature_k")?;
        non_negative(w.propagation_loss_db, "waveguide.propagation_loss_db")?;
        non_negative(w.coupling_loss_in_db, "waveguide.coupling_loss_in_db")?;
        non_negative(w.coupling_loss_out_db, "waveguide.coupling_loss_out_db")?;

        positive(self.pump.wavelength_nm, "pump.wavelength_nm")?;
        non_negative(self.pump.power_mw, "pump.power_mw")?;
        self.pump.envelope.to_core().validate().map_err(|e| invalid("pump.envelope", e.to_string()))?;

        self.bands_core()?;

        let l = &self.losses;
        non_negative(l.coupling_out_uncertainty_db, "losses.coupling_out_uncertainty_db")?;
        non_negative(l.propagation_uncertainty_db, "losses.propagation_uncertainty_db")?;
        non_negative(l.coupling_in_uncertainty_db, "losses.coupling_in_uncertainty_db")?;
        for (i, e) in l.extra.iter().enumerate() {
            non_negative(e.loss_db, &format!("losses.extra[{i}].loss_db"))?;
            non_negative(e.uncertainty_db, &format!("losses.extra[{i}].uncertainty_db"))?;
        }

        for (arm, list) in [("stokes", &self.filters.stokes), ("anti_stokes", &self.filters.anti_stokes)] {
            for (i, f) in list.iter().enumerate() {
                let at = |field: &str| format!("filters.{arm}[{i}].{field}");
                positive(f.center_nm, &at("center_nm"))?;
                positive(f.width_nm, &at("width_nm"))?;
                non_negative(f.extinction_db, &at("extinction_db"))?;
                non_negative(f.insertion_loss_db, &at("insertion_loss_db"))?;
            }
        }

        for (arm, d) in [("stokes", &self.detectors.stokes), ("anti_stokes", &self.detectors.anti_stokes)] {
            let at = |field: &str| format!("detectors.{arm}.{field}");
            check((0.0..=1.0).contains(&d.efficiency), &at("efficiency"), "must be within [0, 1]")?;
            non_negative(d.efficiency_uncertainty, &at("efficiency_uncertainty"))?;
            non_negative(d.dark_rate_hz, &at("dark_rate_hz"))?;
            non_negative(d.jitter_ps, &at("jitter_ps"))?;
            if d.free_running {
                positive(d.dead_time_us, &at("dead_time_us"))?;
            } else {
                positive(d.gate_rate_khz, &at("gate_rate_khz"))?;
                positive(d.gate_width_ns, &at("gate_width_ns"))?;
                non_negative(d.dead_time_us, &at("dead_time_us"))?;
                check(
                    d.gate_width_ns / 1e9 * d.gate_rate_khz * 1e3 <= 1.0,
                    &at("gate_width_ns"),
                    "gates overlap at this gate rate",
                )?;
            }
            d.to_core().validate().map_err(|e| invalid(format!("detectors.{arm}"), e.to_string()))?;
        }

        let s = &self.simulation;
        positive(s.duration_s, "simulation.duration_s")?;
        check(s.batches >= 1, "simulation.batches", "must be >= 1")?;
        positive(s.bin_width_ns, "simulation.bin_width_ns")?;
        check(s.span_ns >= s.bin_width_ns, "simulation.span_ns", "must be at least one bin wide")?;
        check((0.0..1.0).contains(&s.noise_fraction), "simulation.noise_fraction", "must be within [0, 1)")?;
        check(s.spectrum_points >= 2, "simulation.spectrum_points", "must be >= 2")?;

        let t = &self.timetrace;
        t.envelope.to_core().validate().map_err(|e| invalid("timetrace.envelope", e.to_string()))?;
        check(!t.powers_mw.is_empty(), "timetrace.powers_mw", "must not be empty")?;
        for (i, &p) in t.powers_mw.iter().enumerate() {
            positive(p, &format!("timetrace.powers_mw[{i}]"))?;
        }
        check(t.bin_width_ps > 0.0 && t.bin_width_ps <= 100.0, "timetrace.bin_width_ps", "must be within (0, 100]")?;
        positive(t.duration_s, "timetrace.duration_s")?;
        non_negative(t.jitter_ps, "timetrace.jitter_ps")?;
        check(t.window_start_ns.is_finite(), "timetrace.window_start_ns", "must be finite")?;
        non_negative(t.thermal_coefficient, "timetrace.thermal_coefficient")?;
        non_negative(t.carrier_coefficient, "timetrace.carrier_coefficient")?;
        positive(t.carrier_lifetime_ns, "timetrace.carrier_lifetime_ns")?;
        non_negative(t.carrier_linear, "timetrace.carrier_linear")?;
        non_negative(t.carrier_quadratic, "timetrace.carrier_quadratic")?;

        positive(self.fit.scale, "fit.scale")?;
        if let Some(t) = self.fit.fixed_temperature_k {
            positive(t, "fit.fixed_temperature_k")?;
        }
        if let Some(k) = self.fit.fixed_kappa_per_cm_per_thz {
            positive(k, "fit.fixed_kappa_per_cm_per_thz")?;
        }

        if let Some(r) = &self.raman {
            positive(r.reference_power_mw, "raman.reference_power_mw")?;
        }

        if let Some(sweep) = &self.sweep {
            check(!sweep.grid.is_empty(), "sweep.grid", "must not be empty")?;
            check(sweep.grid.windows(2).all(|w| w[0] < w[1]), "sweep.grid", "must be strictly increasing")?;
            for (i, &v) in sweep.grid.iter().enumerate() {
                let at = format!("sweep.grid[{i}]");
                match sweep.variable {
                    SweepVariable::Power => non_negative(v, &at)?,
                    SweepVariable::Temperature => positive(v, &at)?,
                    SweepVariable::Detuning => check(v != 0.0 && v.is_finite(), &at, "must be finite and non-zero")?,
                }
            }
        }
        Ok(())
    }

    fn bands_core(&self) -> Result<BandPair, CliError> {
        let b = &self.bands;
        let band = |name: &str, [lo, hi]: [f64; 2]| -> Result<SpectralBand, CliError> {
            let band = SpectralBand {
                detuning_min: lo * THZ,
                detuning_max: hi * THZ,
                allow_zero_crossing: b.allow_zero_crossing,
            };
            band.validate_guard(DEFAULT_GUARD_HZ).map_err(|e| invalid(format!("bands.{name}"), e.to_string()))?;
            Ok(band)
        };
        let pair = BandPair {
            stokes: band("stokes_thz", b.stokes_thz)?,
            anti_stokes: band("anti_stokes_thz", b.anti_stokes_thz)?,
        };
        pair.validate(DEFAULT_GUARD_HZ).map_err(|e| invalid("bands", e.to_string()))?;
        Ok(pair)
    }

    pub fn waveguide_core(&self) -> WaveguideParams {
        let w = &self.waveguide;
        WaveguideParams {
            length: w.length_mm / 1e3,
            beta2: w.beta2_ps2_per_m * PS2_PER_M,
            gamma: w.gamma_per_w_per_m,
            kappa: kappa_from_per_cm_per_thz(w.kappa_per_cm_per_thz),
            temperature: w.temperature_k,
            propagation_loss_db: w.propagation_loss_db,
            coupling_loss_in_db: w.coupling_loss_in_db,
            coupling_loss_out_db: w.coupling_loss_out_db,
        }
    }

    pub fn timetrace_envelope(&self) -> PumpEnvelope {
        self.timetrace.envelope.to_core()
    }

    pub fn carrier_generation(&self) -> CarrierGeneration {
        CarrierGeneration { linear: self.timetrace.carrier_linear, quadratic: self.timetrace.carrier_quadratic }
    }

    /// Converts to SI model types and loads the Raman table if configured.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let wg = self.waveguide_core();
        let pump = PumpConfig {
            carrier_wavelength: self.pump.wavelength_nm * NM,
            power: self.pump.power_mw * MW,
            envelope: self.pump.envelope.to_core(),
        };
        let mut budget = LossBudget::default();
        budget.push("output coupling", wg.coupling_loss_out_db, self.losses.coupling_out_uncertainty_db);
        budget.push("propagation", wg.propagation_loss_db, self.losses.propagation_uncertainty_db);
        for e in &self.losses.extra {
            budget.push(e.label.clone(), e.loss_db, e.uncertainty_db);
        }
        let instrument = Instrument {
            budget,
            stokes_filters: self.filters.stokes.iter().map(|f| f.to_core()).collect(),
            anti_stokes_filters: self.filters.anti_stokes.iter().map(|f| f.to_core()).collect(),
            stokes_detector: self.detectors.stokes.to_core(),
            anti_stokes_detector: self.detectors.anti_stokes.to_core(),
        };
        instrument.validate().map_err(|e| invalid("filters", e.to_string()))?;
        let raman = match &self.raman {
            Some(r) => Some(
                TabulatedSpectrum::from_csv_path(&r.table, r.reference_power_mw * MW)
                    .map_err(|e| invalid("raman.table", format!("{}: {e}", r.table.display())))?,
            ),
            None => None,
        };
        Ok(Resolved { wg, pump, bands: self.bands_core()?, instrument, raman })
    }

    /// Grid of the configured sweep if it is over `variable`, else `default`.
    /// The configured grid when it sweeps `variable`, otherwise `default`, so
    /// one file can drive several commands.
    pub fn sweep_grid(&self, variable: SweepVariable, default: Vec<f64>) -> Vec<f64> {
        match &self.sweep {
            Some(s) if s.variable == variable => s.grid.clone(),
            _ => default,
        }
    }
}

/// Tables merge key by key; anything else in `over` replaces `base`, as do
/// tagged tables (those with a `kind`), whose fields depend on the tag.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Sets `a.b.c=value`. The value is read as a TOML literal, falling back to
/// a bare string; numeric path segments index into arrays.
fn parse_table(text: &str) -> Result<toml::Table, CliError> {
    text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("parse error: {}", e.message())))
}

pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_owned()),
    };
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} is malformed")));
    }
    let mut node = table;
    for (depth, seg) in segments[..segments.len() - 1].iter().enumerate() {
        let here = segments[..=depth].join(".");
        let next = segments[depth + 1];
        let child = node.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match child {
            toml::Value::Table(t) => t,
            toml::Value::Array(items) => {
                let i: usize = next
                    .parse()
                    .map_err(|_| CliError::Config(format!("{here} is an array; expected an index, got {next:?}")))?;
                let len = items.len();
                let item = items
                    .get_mut(i)
                    .ok_or_else(|| CliError::Config(format!("{here}[{i}] out of range (length {len})")))?;
                if depth + 2 == segments.len() {
                    *item = value;
                    return Ok(());
                }
                return apply_override(
                    item.as_table_mut().ok_or_else(|| CliError::Config(format!("{here}[{i}] is not a table")))?,
                    &format!("{}={raw}", segments[depth + 2..].join(".")),
                );
            }
            _ => return Err(CliError::Config(format!("{here} is a value, not a table"))),
        };
    }
    node.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}
