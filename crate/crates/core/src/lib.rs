//! Simulation and analysis of photon-pair generation and broadband thermal
//! scattering noise in silicon wire waveguides.
//!
//! - [`model`]: Bose–Einstein scattering, four-wave-mixing pair spectra and
//!   band integrals.
//! - [`instrument`]: filters, loss budgets, gated detectors.
//! - [`event_sim`]: seeded Monte Carlo detection streams, coincidence
//!   histograms, carrier dynamics and time-resolved traces.
//! - [`fitting`]: damped least squares for the power, Bose–Einstein, sinc²
//!   and linear-temperature models, plus κ extraction.

// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod event_sim;
pub mod fitting;
pub mod instrument;
pub mod model;
pub mod par;
pub mod quadrature;
pub mod spectrum;
pub mod units;

pub use instrument::{Channel, DetectorParams, FilterElement, FilterKind, Instrument, LossBudget};
pub use model::{ModelError, PumpConfig, PumpEnvelope, WaveguideParams};
pub use spectrum::{BandPair, SpectralBand, SpectrumPoint, SpectrumSeries, TabulatedSpectrum};
pub use units::{PhysicalConstants, CONSTANTS};
