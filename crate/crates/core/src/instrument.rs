//! Filter chain, loss budget and gated single-photon detector response.

use crate::spectrum::SpectrumSeries;
use crate::units::{self, db_to_linear, NM};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstrumentError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: &'static str },
}

fn invalid(field: &'static str, reason: &'static str) -> InstrumentError {
    InstrumentError::Invalid { field, reason }
}

/// Detection arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Stokes,
    AntiStokes,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Stokes, Channel::AntiStokes];

    pub fn label(self) -> &'static str {
        match self {
            Channel::Stokes => "stokes",
            Channel::AntiStokes => "anti_stokes",
        }
    }

    /// Sign of detunings routed to this arm.
    pub fn sign(self) -> f64 {
        match self {
            Channel::Stokes => -1.0,
            Channel::AntiStokes => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Bandpass,
    Bandblock,
    Demux,
    GaussianTunable,
}

/// One optical filter. Band filters are flat-top between
/// `center ± width/2`; the Gaussian kind uses `width` as its FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterElement {
    pub kind: FilterKind,
    /// m
    pub center: f64,
    /// m
    pub width: f64,
    pub out_of_band_extinction_db: f64,
    pub insertion_loss_db: f64,
}

impl FilterElement {
    pub fn validate(&self) -> Result<(), InstrumentError> {
        if !(self.center > 0.0 && self.center.is_finite()) {
            return Err(invalid("filter.center", "must be > 0"));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(invalid("filter.width", "must be > 0"));
        }
        if !(self.out_of_band_extinction_db >= 0.0 && self.out_of_band_extinction_db.is_finite()) {
            return Err(invalid("filter.out_of_band_extinction_db", "must be >= 0"));
        }
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(invalid("filter.insertion_loss_db", "must be >= 0"));
        }
        Ok(())
    }

    /// Power transmission at a vacuum wavelength, always in (0, 1].
    pub fn transmission(&self, wavelength: f64) -> f64 {
        let insertion = db_to_linear(self.insertion_loss_db);
        let floor = db_to_linear(self.out_of_band_extinction_db);
        let offset = wavelength - self.center;
        let in_band = offset.abs() <= 0.5 * self.width;
        let relative = match self.kind {
            FilterKind::GaussianTunable => {
                let g = (-4.0 * std::f64::consts::LN_2 * offset * offset / (self.width * self.width)).exp();
                g.max(floor)
            }
            FilterKind::Bandpass | FilterKind::Demux => {
                if in_band {
                    1.0
                } else {
                    floor
                }
            }
            FilterKind::Bandblock => {
                if in_band {
                    floor
                } else {
                    1.0
                }
            }
        };
        relative * insertion
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossElement {
    pub label: String,
    pub loss_db: f64,
    /// 1σ, dB
    #[serde(default)]
    pub uncertainty_db: f64,
}

/// Ordered lumped losses between the generation point and the filters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBudget {
    pub elements: Vec<LossElement>,
}

impl LossBudget {
    pub fn new(elements: Vec<LossElement>) -> Result<Self, InstrumentError> {
        let budget = Self { elements };
        budget.validate()?;
        Ok(budget)
    }

    pub fn push(&mut self, label: impl Into<String>, loss_db: f64, uncertainty_db: f64) {
        self.elements.push(LossElement { label: label.into(), loss_db, uncertainty_db });
    }

    pub fn validate(&self) -> Result<(), InstrumentError> {
        for e in &self.elements {
            if !(e.loss_db >= 0.0 && e.loss_db.is_finite()) {
                return Err(invalid("loss_budget.loss_db", "must be >= 0"));
            }
            if !(e.uncertainty_db >= 0.0) {
                return Err(invalid("loss_budget.uncertainty_db", "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn total_db(&self) -> f64 {
        self.elements.iter().map(|e| e.loss_db).sum()
    }

    pub fn transmission(&self) -> f64 {
        db_to_linear(self.total_db())
    }

    /// Relative 1σ uncertainty of [`Self::transmission`], elements independent.
    pub fn relative_uncertainty(&self) -> f64 {
        self.elements.iter().map(|e| units::db_uncertainty_to_relative(e.uncertainty_db).powi(2)).sum::<f64>().sqrt()
    }
}

/// Transmission of a filter chain times a loss budget.
pub fn chain_transmission(chain: &[FilterElement], budget: &LossBudget, wavelength: f64) -> f64 {
    chain.iter().map(|f| f.transmission(wavelength)).product::<f64>() * budget.transmission()
}

/// Applies a filter chain and loss budget to a spectrum around `pump_carrier` (Hz).
pub fn apply_chain(
    spectrum: &SpectrumSeries,
    pump_carrier: f64,
    chain: &[FilterElement],
    budget: &LossBudget,
) -> SpectrumSeries {
    spectrum.scaled_by(|nu| {
        let wavelength = units::CONSTANTS.light_speed / (pump_carrier + nu);
        chain_transmission(chain, budget, wavelength)
    })
}

/// Gated Geiger-mode APD. A free-running detector is modelled as
/// back-to-back gates one dead time long.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// absolute 1σ on `efficiency`
    #[serde(default)]
    pub efficiency_uncertainty: f64,
    /// observed dark count rate, Hz
    pub dark_rate: f64,
    pub gate_rate: f64,
    /// s
    pub gate_width: f64,
    /// s
    pub dead_time: f64,
    /// s, Gaussian 1σ
    pub jitter_sigma: f64,
}

impl DetectorParams {
    /// Stokes-arm detector of the CW measurements.
    pub fn id201_stokes() -> Self {
        Self {
            efficiency: 0.10,
            efficiency_uncertainty: 0.01,
            dark_rate: 805.0,
            gate_rate: 100e3,
            gate_width: 100e-9,
            dead_time: 10e-6,
            jitter_sigma: 250e-12,
        }
    }

    pub fn id201_anti_stokes() -> Self {
        Self { efficiency: 0.15, dark_rate: 155.0, ..Self::id201_stokes() }
    }

    /// Continuously armed detector: contiguous gates of one dead time.
    pub fn free_running(efficiency: f64, dark_rate: f64, dead_time: f64, jitter_sigma: f64) -> Self {
        Self {
            efficiency,
            efficiency_uncertainty: 0.0,
            dark_rate,
            gate_rate: 1.0 / dead_time,
            gate_width: dead_time,
            dead_time,
            jitter_sigma,
        }
    }

    pub fn validate(&self) -> Result<(), InstrumentError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("detector.efficiency", "must be within [0, 1]"));
        }
        if !(self.efficiency_uncertainty >= 0.0) {
            return Err(invalid("detector.efficiency_uncertainty", "must be >= 0"));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(invalid("detector.dark_rate", "must be >= 0"));
        }
        if !(self.gate_rate > 0.0 && self.gate_width > 0.0) {
            return Err(invalid("detector.gate", "rate and width must be > 0"));
        }
        if self.gate_rate * self.gate_width > 1.0 + 1e-12 {
            return Err(invalid("detector.gate", "gate_rate × gate_width must be <= 1"));
        }
        if self.dark_rate >= self.gate_rate {
            return Err(invalid("detector.dark_rate", "must be below the gate rate"));
        }
        if !(self.dead_time >= 0.0 && self.jitter_sigma >= 0.0) {
            return Err(invalid("detector", "dead time and jitter must be >= 0"));
        }
        Ok(())
    }

    pub fn duty_cycle(&self) -> f64 {
        (self.gate_rate * self.gate_width).min(1.0)
    }

    pub fn is_free_running(&self) -> bool {
        self.duty_cycle() >= 1.0 - 1e-12
    }

    /// Dark click probability per gate.
    pub fn dark_per_gate(&self) -> f64 {
        self.dark_rate / self.gate_rate
    }
}

/// Expected photon detections per gate for an incident flux.
pub fn detections_per_gate(incident_flux: f64, det: &DetectorParams) -> f64 {
    det.efficiency * incident_flux * det.gate_width
}

/// Observed click rate: at most one click per gate, dark clicks included.
pub fn detected_rate(incident_flux: f64, det: &DetectorParams) -> f64 {
    let mu = detections_per_gate(incident_flux.max(0.0), det);
    det.gate_rate * (1.0 - (1.0 - det.dark_per_gate()) * (-mu).exp())
}

/// Linear-response prediction η·duty·Φ + dark.
pub fn linear_detected_rate(incident_flux: f64, det: &DetectorParams) -> f64 {
    det.efficiency * det.duty_cycle() * incident_flux + det.dark_rate
}

/// Inverts [`detected_rate`] back to the dark-subtracted, saturation-free
/// rate η·duty·Φ. Rates at or above the gate rate are not invertible.
pub fn linearized_signal_rate(rate: f64, det: &DetectorParams) -> Option<f64> {
    if !(rate < det.gate_rate) {
        return None;
    }
    let mu = -((1.0 - rate / det.gate_rate) / (1.0 - det.dark_per_gate())).ln();
    Some(mu * det.gate_rate)
}

/// Both detection arms with their filters and the shared loss budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub budget: LossBudget,
    pub stokes_filters: Vec<FilterElement>,
    pub anti_stokes_filters: Vec<FilterElement>,
    pub stokes_detector: DetectorParams,
    pub anti_stokes_detector: DetectorParams,
}

impl Instrument {
    /// Bandblock at the pump, 16–18 nm demultiplexer arms and the two ID201s.
    pub fn reference_setup(wg: &crate::model::WaveguideParams, pump_wavelength: f64) -> Self {
        let mut budget = LossBudget::default();
        budget.push("output coupling", wg.coupling_loss_out_db, 0.5);
        budget.push("propagation", wg.propagation_loss_db, 0.5);
        let bandblock = FilterElement {
            kind: FilterKind::Bandblock,
            center: pump_wavelength,
            width: 1.6 * NM,
            out_of_band_extinction_db: 150.0,
            insertion_loss_db: 0.0,
        };
        let demux = |center_nm: f64| FilterElement {
            kind: FilterKind::Demux,
            center: center_nm * NM,
            width: 18.0 * NM,
            out_of_band_extinction_db: 40.0,
            insertion_loss_db: 0.0,
        };
        Self {
            budget,
            stokes_filters: vec![bandblock, demux(1551.0)],
            anti_stokes_filters: vec![bandblock, demux(1529.0)],
            stokes_detector: DetectorParams::id201_stokes(),
            anti_stokes_detector: DetectorParams::id201_anti_stokes(),
        }
    }

    pub fn validate(&self) -> Result<(), InstrumentError> {
        self.budget.validate()?;
        for f in self.stokes_filters.iter().chain(&self.anti_stokes_filters) {
            f.validate()?;
        }
        self.stokes_detector.validate()?;
        self.anti_stokes_detector.validate()
    }

    pub fn filters(&self, channel: Channel) -> &[FilterElement] {
        match channel {
            Channel::Stokes => &self.stokes_filters,
            Channel::AntiStokes => &self.anti_stokes_filters,
        }
    }

    pub fn detector(&self, channel: Channel) -> &DetectorParams {
        match channel {
            Channel::Stokes => &self.stokes_detector,
            Channel::AntiStokes => &self.anti_stokes_detector,
        }
    }

    pub fn detector_mut(&mut self, channel: Channel) -> &mut DetectorParams {
        match channel {
            Channel::Stokes => &mut self.stokes_detector,
            Channel::AntiStokes => &mut self.anti_stokes_detector,
        }
    }

    /// Generation point to detector input, for light at `detuning` from the pump.
    pub fn transmission(&self, channel: Channel, detuning: f64, pump_carrier: f64) -> f64 {
        let wavelength = units::CONSTANTS.light_speed / (pump_carrier + detuning);
        chain_transmission(self.filters(channel), &self.budget, wavelength)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumPoint;

    fn gaussian() -> FilterElement {
        FilterElement {
            kind: FilterKind::GaussianTunable,
            center: 1550.0 * NM,
            width: 1.5 * NM,
            out_of_band_extinction_db: 60.0,
            insertion_loss_db: 1.0,
        }
    }

    #[test]
    fn gaussian_peak_and_half_width() {
        let f = gaussian();
        let peak = f.transmission(f.center);
        assert!((peak - db_to_linear(1.0)).abs() < 1e-15);
        for side in [-1.0, 1.0] {
            let t = f.transmission(f.center + side * 0.75 * NM);
            assert!((t / peak - 0.5).abs() < 1e-12);
        }
        // floor instead of zero far away
        assert!((f.transmission(1600.0 * NM) / peak - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn bandblock_extinction() {
        let f = FilterElement {
            kind: FilterKind::Bandblock,
            center: 1539.8 * NM,
            width: 1.6 * NM,
            out_of_band_extinction_db: 150.0,
            insertion_loss_db: 0.0,
        };
        assert!(f.transmission(1539.9 * NM) <= 1e-15 * (1.0 + 1e-12));
        assert_eq!(f.transmission(1550.0 * NM), 1.0);
        let bp = FilterElement { kind: FilterKind::Bandpass, ..f };
        assert_eq!(bp.transmission(1539.9 * NM), 1.0);
        assert!(bp.transmission(1545.0 * NM) <= 1e-15 * (1.0 + 1e-12));
    }

    #[test]
    fn transmissions_in_unit_interval() {
        let f = gaussian();
        for i in 0..1000 {
            let wl = 1400e-9 + i as f64 * 0.3e-9;
            let t = f.transmission(wl);
            assert!(t > 0.0 && t <= 1.0);
        }
    }

    fn spectrum() -> SpectrumSeries {
        let points = (1..=20)
            .map(|i| {
                let d = -2.5e12 + i as f64 * 0.24e12;
                SpectrumPoint { detuning: d, flux_density: 1e-3 * i as f64, sigma: 1e-5 }
            })
            .collect();
        SpectrumSeries::new(points).unwrap()
    }

    #[test]
    fn chain_identity_and_commutation() {
        let carrier = units::wavelength_to_frequency(1539.8 * NM).unwrap();
        let s = spectrum();
        assert_eq!(apply_chain(&s, carrier, &[], &LossBudget::default()), s);
        let wg = crate::model::WaveguideParams::default();
        let inst = Instrument::reference_setup(&wg, 1539.8 * NM);
        let mut chain = inst.stokes_filters.clone();
        chain.push(gaussian());
        let forward = apply_chain(&s, carrier, &chain, &inst.budget);
        chain.reverse();
        let backward = apply_chain(&s, carrier, &chain, &inst.budget);
        for (a, b) in forward.points().iter().zip(backward.points()) {
            assert!((a.flux_density - b.flux_density).abs() <= 1e-15 * a.flux_density.abs());
            assert!(a.flux_density <= s.points().iter().find(|p| p.detuning == a.detuning).unwrap().flux_density);
        }
    }

    #[test]
    fn pump_band_suppressed() {
        let wg = crate::model::WaveguideParams::default();
        let inst = Instrument::reference_setup(&wg, 1539.8 * NM);
        let carrier = units::wavelength_to_frequency(1539.8 * NM).unwrap();
        for ch in Channel::BOTH {
            for d in [-50e9, 20e9, 60e9] {
                assert!(inst.transmission(ch, d, carrier) <= 1e-15);
            }
        }
    }

    #[test]
    fn loss_budget() {
        let mut b = LossBudget::default();
        b.push("coupling", 6.0, 0.5);
        b.push("propagation", 2.5, 0.5);
        assert!((b.transmission() - 0.141_253_754_462_275_4).abs() < 1e-12);
        let expected = (2.0f64).sqrt() * std::f64::consts::LN_10 / 20.0;
        assert!((b.relative_uncertainty() - expected).abs() < 1e-15);
        assert!(LossBudget::new(vec![LossElement { label: "x".into(), loss_db: -1.0, uncertainty_db: 0.0 }]).is_err());
    }

    #[test]
    fn detector_duty_and_dark_floor() {
        let det = DetectorParams::id201_stokes();
        assert!((det.duty_cycle() - 1e-2).abs() < 1e-15);
        assert!((detected_rate(0.0, &det) - det.dark_rate).abs() < 1e-9);
    }

    #[test]
    fn saturation_negligible_at_low_occupancy() {
        let det = DetectorParams { dark_rate: 0.0, ..DetectorParams::id201_stokes() };
        // µ = 0.01 detections per gate
        let flux = 0.01 / (det.efficiency * det.gate_width);
        let exact = detected_rate(flux, &det);
        let linear = linear_detected_rate(flux, &det);
        assert!((exact / linear - 1.0).abs() < 0.005);
    }

    #[test]
    fn detected_rate_monotone_and_capped() {
        let det = DetectorParams::id201_anti_stokes();
        let mut last = 0.0;
        for k in 0..200 {
            let flux = 10f64.powf(k as f64 / 10.0);
            let r = detected_rate(flux, &det);
            assert!(r >= last && r <= det.gate_rate);
            last = r;
        }
    }

    #[test]
    fn linearization_inverts_detection() {
        let det = DetectorParams::id201_stokes();
        for flux in [0.0, 1e3, 1e6, 3e7] {
            let lin = linearized_signal_rate(detected_rate(flux, &det), &det).unwrap();
            let expected = det.efficiency * det.duty_cycle() * flux;
            assert!((lin - expected).abs() <= 1e-9 * expected.max(1.0));
        }
        assert!(linearized_signal_rate(det.gate_rate, &det).is_none());
    }

    #[test]
    fn detector_validation() {
        let mut d = DetectorParams::id201_stokes();
        d.efficiency = 1.2;
        assert!(d.validate().is_err());
        let mut d = DetectorParams::id201_stokes();
        d.gate_width = 20e-6;
        assert!(d.validate().is_err());
        let free = DetectorParams::free_running(0.2, 100.0, 50e-9, 40e-12);
        free.validate().unwrap();
        assert!(free.is_free_running());
    }
}
