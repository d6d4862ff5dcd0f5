//! Spectral bands, sampled spectra and tabulated densities.

use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;
use thiserror::Error;

/// Default exclusion interval around the pump, in Hz.
pub const DEFAULT_GUARD_HZ: f64 = 10e9;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("band [{min}, {max}] Hz is empty or inverted")]
    EmptyBand { min: f64, max: f64 },
    #[error("band [{min}, {max}] Hz straddles zero detuning; set allow_zero_crossing to split it")]
    StraddlesZero { min: f64, max: f64 },
    #[error("band [{min}, {max}] Hz reaches into the ±{guard} Hz guard around the pump")]
    InsideGuard { min: f64, max: f64, guard: f64 },
    #[error("spectrum point {index}: {reason}")]
    BadPoint { index: usize, reason: &'static str },
    #[error("detuning {detuning} Hz outside tabulated support [{min}, {max}] Hz")]
    OutsideSupport { detuning: f64, min: f64, max: f64 },
    #[error("tabulated spectrum needs at least two rows")]
    TooShort,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected csv header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<&'static str> },
}

/// Closed interval of signed detuning (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    pub detuning_min: f64,
    pub detuning_max: f64,
    #[serde(default)]
    pub allow_zero_crossing: bool,
}

impl SpectralBand {
    pub fn new(detuning_min: f64, detuning_max: f64) -> Result<Self, SpectrumError> {
        let band = Self { detuning_min, detuning_max, allow_zero_crossing: false };
        band.validate()?;
        Ok(band)
    }

    /// A band that may contain ν = 0; integrations skip the guard interval.
    pub fn straddling(detuning_min: f64, detuning_max: f64) -> Result<Self, SpectrumError> {
        let band = Self { detuning_min, detuning_max, allow_zero_crossing: true };
        band.validate()?;
        Ok(band)
    }

    pub fn from_thz(min_thz: f64, max_thz: f64) -> Result<Self, SpectrumError> {
        Self::new(min_thz * crate::units::THZ, max_thz * crate::units::THZ)
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        let (min, max) = (self.detuning_min, self.detuning_max);
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(SpectrumError::EmptyBand { min, max });
        }
        if min < 0.0 && max > 0.0 && !self.allow_zero_crossing {
            return Err(SpectrumError::StraddlesZero { min, max });
        }
        Ok(())
    }

    /// Checks that the band keeps clear of the pump guard interval.
    pub fn validate_guard(&self, guard: f64) -> Result<(), SpectrumError> {
        self.validate()?;
        if self.allow_zero_crossing {
            return Ok(());
        }
        let inner = self.detuning_min.abs().min(self.detuning_max.abs());
        if inner < guard {
            return Err(SpectrumError::InsideGuard { min: self.detuning_min, max: self.detuning_max, guard });
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.detuning_max - self.detuning_min
    }

    pub fn contains(&self, detuning: f64) -> bool {
        detuning >= self.detuning_min && detuning <= self.detuning_max
    }

    pub fn is_stokes(&self) -> bool {
        self.detuning_max <= 0.0
    }

    /// Same band reflected through the pump.
    pub fn mirrored(&self) -> Self {
        Self {
            detuning_min: -self.detuning_max,
            detuning_max: -self.detuning_min,
            allow_zero_crossing: self.allow_zero_crossing,
        }
    }

    /// Integration segments, with the guard interval removed from a
    /// zero-straddling band.
    pub fn segments(&self, guard: f64) -> Vec<(f64, f64)> {
        if self.detuning_min < 0.0 && self.detuning_max > 0.0 {
            let mut out = Vec::with_capacity(2);
            if self.detuning_min < -guard {
                out.push((self.detuning_min, -guard));
            }
            if self.detuning_max > guard {
                out.push((guard, self.detuning_max));
            }
            out
        } else {
            vec![(self.detuning_min, self.detuning_max)]
        }
    }
}

/// Stokes and anti-Stokes detection bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPair {
    pub stokes: SpectralBand,
    pub anti_stokes: SpectralBand,
}

impl BandPair {
    /// 0.4–2.5 THz on both sides of the pump.
    pub fn reference_setup() -> Self {
        Self {
            stokes: SpectralBand::from_thz(-2.5, -0.4).expect("valid band"),
            anti_stokes: SpectralBand::from_thz(0.4, 2.5).expect("valid band"),
        }
    }

    pub fn get(&self, channel: crate::instrument::Channel) -> &SpectralBand {
        match channel {
            crate::instrument::Channel::Stokes => &self.stokes,
            crate::instrument::Channel::AntiStokes => &self.anti_stokes,
        }
    }

    /// Each band on its own side of the pump and clear of the guard, unless
    /// flagged as crossing zero.
    pub fn validate(&self, guard: f64) -> Result<(), SpectrumError> {
        self.stokes.validate_guard(guard)?;
        self.anti_stokes.validate_guard(guard)?;
        if self.stokes.detuning_max > 0.0 && !(self.stokes.allow_zero_crossing && self.stokes.detuning_min < 0.0) {
            return Err(SpectrumError::BadPoint { index: 0, reason: "Stokes band must lie at negative detuning" });
        }
        if self.anti_stokes.detuning_min < 0.0
            && !(self.anti_stokes.allow_zero_crossing && self.anti_stokes.detuning_max > 0.0)
        {
            return Err(SpectrumError::BadPoint { index: 1, reason: "anti-Stokes band must lie at positive detuning" });
        }
        Ok(())
    }
}

/// One sample of a flux spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// Hz
    pub detuning: f64,
    /// s⁻¹Hz⁻¹
    pub flux_density: f64,
    pub sigma: f64,
}

/// Flux density versus detuning, strictly increasing in detuning.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumSeries {
    points: Vec<SpectrumPoint>,
}

impl SpectrumSeries {
    pub fn new(points: Vec<SpectrumPoint>) -> Result<Self, SpectrumError> {
        for (index, p) in points.iter().enumerate() {
            if !p.detuning.is_finite() || !p.flux_density.is_finite() || !p.sigma.is_finite() {
                return Err(SpectrumError::BadPoint { index, reason: "non-finite value" });
            }
            if p.flux_density < 0.0 {
                return Err(SpectrumError::BadPoint { index, reason: "negative flux density" });
            }
            if p.sigma < 0.0 {
                return Err(SpectrumError::BadPoint { index, reason: "negative sigma" });
            }
            if index > 0 && p.detuning <= points[index - 1].detuning {
                return Err(SpectrumError::BadPoint { index, reason: "detunings not increasing" });
            }
        }
        Ok(Self { points })
    }

    /// Samples `density` on the given detunings with zero uncertainty.
    pub fn from_fn<E>(detunings: &[f64], mut density: impl FnMut(f64) -> Result<f64, E>) -> Result<Self, E>
    where
        E: From<SpectrumError>,
    {
        let points = detunings
            .iter()
            .map(|&d| Ok(SpectrumPoint { detuning: d, flux_density: density(d)?, sigma: 0.0 }))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Self::new(points)?)
    }

    pub fn points(&self) -> &[SpectrumPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn detunings(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.detuning)
    }

    /// Multiplies every density and sigma by `factor(detuning)`.
    pub fn scaled_by(&self, mut factor: impl FnMut(f64) -> f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| {
                let f = factor(p.detuning);
                SpectrumPoint { detuning: p.detuning, flux_density: p.flux_density * f, sigma: p.sigma * f }
            })
            .collect();
        Self { points }
    }

    /// Pointwise sum on a shared grid; sigmas add in quadrature.
    pub fn sum(series: &[&SpectrumSeries]) -> Option<Self> {
        let first = series.first()?;
        let mut points = first.points.clone();
        for other in &series[1..] {
            if other.points.len() != points.len() {
                return None;
            }
            for (acc, p) in points.iter_mut().zip(&other.points) {
                if acc.detuning != p.detuning {
                    return None;
                }
                acc.flux_density += p.flux_density;
                acc.sigma = acc.sigma.hypot(p.sigma);
            }
        }
        Some(Self { points })
    }
}

/// Piecewise-linear density on monotone knots, defined at a reference pump power.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpectrum {
    detunings: Vec<f64>,
    densities: Vec<f64>,
    reference_power: f64,
}

const TABLE_HEADER: [&str; 2] = ["detuning_hz", "flux_density_per_hz"];

impl TabulatedSpectrum {
    pub fn new(detunings: Vec<f64>, densities: Vec<f64>, reference_power: f64) -> Result<Self, SpectrumError> {
        if detunings.len() < 2 || detunings.len() != densities.len() {
            return Err(SpectrumError::TooShort);
        }
        for (i, (&d, &v)) in detunings.iter().zip(&densities).enumerate() {
            if !d.is_finite() || !v.is_finite() {
                return Err(SpectrumError::BadPoint { index: i, reason: "non-finite value" });
            }
            if v < 0.0 {
                return Err(SpectrumError::BadPoint { index: i, reason: "negative flux density" });
            }
            if i > 0 && d <= detunings[i - 1] {
                return Err(SpectrumError::BadPoint { index: i, reason: "detunings not increasing" });
            }
        }
        if !(reference_power > 0.0) {
            return Err(SpectrumError::BadPoint { index: 0, reason: "reference power must be positive" });
        }
        Ok(Self { detunings, densities, reference_power })
    }

    /// Reads a `detuning_hz,flux_density_per_hz` table with header.
    pub fn from_csv_reader<R: Read>(reader: R, reference_power: f64) -> Result<Self, SpectrumError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers != TABLE_HEADER {
            return Err(SpectrumError::Header { found: headers, expected: TABLE_HEADER.to_vec() });
        }
        let mut detunings = Vec::new();
        let mut densities = Vec::new();
        for row in rdr.deserialize() {
            let (d, v): (f64, f64) = row?;
            detunings.push(d);
            densities.push(v);
        }
        Self::new(detunings, densities, reference_power)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, reference_power: f64) -> Result<Self, SpectrumError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, reference_power)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.detunings[0], *self.detunings.last().unwrap())
    }

    pub fn reference_power(&self) -> f64 {
        self.reference_power
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.detunings.iter().copied().zip(self.densities.iter().copied())
    }

    /// Linear interpolation at the reference power.
    pub fn interpolate(&self, detuning: f64) -> Result<f64, SpectrumError> {
        let (min, max) = self.support();
        if !(detuning >= min && detuning <= max) {
            return Err(SpectrumError::OutsideSupport { detuning, min, max });
        }
        let upper = self.detunings.partition_point(|&d| d < detuning);
        if upper == 0 {
            return Ok(self.densities[0]);
        }
        if self.detunings[upper] == detuning {
            return Ok(self.densities[upper]);
        }
        let (x0, x1) = (self.detunings[upper - 1], self.detunings[upper]);
        let (y0, y1) = (self.densities[upper - 1], self.densities[upper]);
        let t = (detuning - x0) / (x1 - x0);
        Ok(y0 + t * (y1 - y0))
    }
}
