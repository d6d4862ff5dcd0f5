//! Seeded Monte Carlo detection events, coincidence histograms, carrier
//! dynamics and time-resolved flux traces.
//!
//! All randomness comes from [`rng_for`]: ChaCha8 seeded from a `u64`, with
//! one ChaCha stream per independent batch, so batches can run in any order
//! (or in parallel) and still give identical results.

mod carrier;
mod edges;
mod generate;
mod histogram;
mod poisson;
mod stream;
mod timetrace;

pub use carrier::{carrier_density_trace, CarrierGeneration, CarrierState};
pub use edges::{rise_fall_time, EdgeError, EdgeTimes, Trace};
pub use generate::{generate_events, generate_pair_emissions, EventModel, OriginMask, PairEmission, PairSampler};
pub use histogram::{coincidence_histogram, snr_estimate, snr_estimate_with, CoincidenceHistogram, SnrEstimate};
pub use poisson::{poisson_arrivals, thin, LiveTimeline};
pub use stream::{Event, EventStream, Origin};
pub use timetrace::{
    compare_normalized, time_resolved_flux, BinnedTrace, TraceChannel, TraceComparison, TraceRequest, TraceSource,
};

use crate::model::ModelError;
use crate::spectrum::SpectrumError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Name of the generator recorded in run reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64, one stream per batch";

pub type SimRng = ChaCha8Rng;

/// Generator for batch `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("histograms with different binning cannot be merged")]
    IncompatibleHistograms,
    #[error("no off-peak region: {0}")]
    EmptyOffPeak(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::quadrature::QuadratureError> for SimError {
    fn from(e: crate::quadrature::QuadratureError) -> Self {
        SimError::Model(e.into())
    }
}
