use super::carrier::{carrier_density_trace, CarrierGeneration};
use super::edges::Trace;
use super::{rng_for, SimError};
use crate::model::{PumpConfig, PumpEnvelope};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Mechanism an emitted-flux channel follows in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TraceSource {
    /// ∝ P(t)
    Thermal,
    /// ∝ P(t)
    Raman,
    /// ∝ P(t)²
    Pair,
    /// ∝ N(t), the hypothetical carrier-driven channel
    Carrier { tau: f64, generation: CarrierGeneration },
}

impl TraceSource {
    pub fn label(&self) -> &'static str {
        match self {
            TraceSource::Thermal => "thermal",
            TraceSource::Raman => "raman",
            TraceSource::Pair => "pair",
            TraceSource::Carrier { .. } => "carrier",
        }
    }
}

/// Detected rate = `coefficient` × (P, P² or N) with P in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceChannel {
    pub source: TraceSource,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRequest {
    pub pump: PumpConfig,
    pub channels: Vec<TraceChannel>,
    /// s
    pub bin_width: f64,
    /// s of acquisition; sets the number of pulses
    pub duration: f64,
    /// s, Gaussian 1σ of the whole timing chain
    pub jitter_sigma: f64,
    /// s relative to the pulse start
    pub window_start: f64,
}

impl TraceRequest {
    pub fn validate(&self) -> Result<f64, SimError> {
        self.pump.validate()?;
        let Some(period) = self.pump.envelope.period() else {
            return Err(SimError::Config("time-resolved traces need a pulsed pump".into()));
        };
        if !(self.bin_width > 0.0 && self.bin_width <= 100e-12 * (1.0 + 1e-9)) {
            return Err(SimError::Config(format!("bin width must be in (0, 100 ps], got {}", self.bin_width)));
        }
        if !(self.duration >= period && self.duration.is_finite()) {
            return Err(SimError::Config("duration must cover at least one pulse period".into()));
        }
        if !(self.jitter_sigma >= 0.0 && self.window_start.abs() < period) {
            return Err(SimError::Config("jitter must be >= 0 and the window must start within a period".into()));
        }
        for ch in &self.channels {
            if !(ch.coefficient >= 0.0 && ch.coefficient.is_finite()) {
                return Err(SimError::Config(format!("{} coefficient must be >= 0", ch.source.label())));
            }
            if let TraceSource::Carrier { tau, .. } = ch.source {
                if !(tau > 0.0) {
                    return Err(SimError::Config("carrier lifetime must be > 0".into()));
                }
            }
        }
        Ok(period)
    }
}

/// Counts folded on the pulse period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedTrace {
    pub source: TraceSource,
    /// s, left edge of bin 0 relative to the pulse start
    pub start: f64,
    pub bin_width: f64,
    pub pulses: u64,
    pub counts: Vec<u64>,
    pub expected: Vec<f64>,
}

impl BinnedTrace {
    /// Bin centres.
    pub fn times(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.start + (i as f64 + 0.5) * self.bin_width).collect()
    }

    /// Counts per pulse, sampled at bin centres.
    pub fn per_pulse(&self) -> Trace {
        let p = self.pulses.max(1) as f64;
        Trace {
            start: self.start + 0.5 * self.bin_width,
            step: self.bin_width,
            values: self.counts.iter().map(|&c| c as f64 / p).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceComparison {
    pub bins: usize,
    pub max_abs_z: f64,
    pub above_3_sigma: usize,
}

impl TraceComparison {
    pub fn fraction_above_3_sigma(&self) -> f64 {
        self.above_3_sigma as f64 / self.bins.max(1) as f64
    }
}

/// Compares two traces after normalising each to unit total inside
/// `[from, to]`, bin by bin with Poisson errors.
pub fn compare_normalized(a: &BinnedTrace, b: &BinnedTrace, from: f64, to: f64) -> Result<TraceComparison, SimError> {
    if a.bin_width != b.bin_width || a.start != b.start || a.counts.len() != b.counts.len() {
        return Err(SimError::Config("traces have different binning".into()));
    }
    let idx: Vec<usize> = a.times().iter().enumerate().filter(|(_, &t)| t >= from && t <= to).map(|(i, _)| i).collect();
    let na: u64 = idx.iter().map(|&i| a.counts[i]).sum();
    let nb: u64 = idx.iter().map(|&i| b.counts[i]).sum();
    if na == 0 || nb == 0 {
        return Err(SimError::Config("no counts in the comparison window".into()));
    }
    let (na, nb) = (na as f64, nb as f64);
    let mut max_abs_z: f64 = 0.0;
    let mut above = 0;
    let mut bins = 0;
    for &i in &idx {
        let (ca, cb) = (a.counts[i] as f64, b.counts[i] as f64);
        let var = ca / (na * na) + cb / (nb * nb);
        if var == 0.0 {
            continue;
        }
        let z = (ca / na - cb / nb) / var.sqrt();
        bins += 1;
        max_abs_z = max_abs_z.max(z.abs());
        if z.abs() > 3.0 {
            above += 1;
        }
    }
    Ok(TraceComparison { bins, max_abs_z, above_3_sigma: above })
}

fn gaussian_kernel(sigma: f64, step: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let half = (5.0 * sigma / step).ceil() as i64;
    let k: Vec<f64> = (-half..=half).map(|i| (-0.5 * (i as f64 * step / sigma).powi(2)).exp()).collect();
    let norm: f64 = k.iter().sum();
    k.into_iter().map(|v| v / norm).collect()
}

fn profile(
    source: &TraceSource,
    envelope: &PumpEnvelope,
    power: f64,
    start: f64,
    dt: f64,
    n: usize,
) -> Result<Vec<f64>, SimError> {
    let at = |i: usize| start + (i as f64 + 0.5) * dt;
    Ok(match source {
        TraceSource::Thermal | TraceSource::Raman => (0..n).map(|i| power * envelope.shape(at(i))).collect(),
        TraceSource::Pair => (0..n).map(|i| (power * envelope.shape(at(i))).powi(2)).collect(),
        TraceSource::Carrier { tau, generation } => {
            carrier_density_trace(envelope, power, *tau, *generation, start + 0.5 * dt, dt, n)?.values
        }
    })
}

/// Binned detection traces over one pump period, accumulated over all
/// pulses in `duration`. Expected counts include the timing jitter; the
/// recorded counts are Poisson draws from them (one RNG stream per channel).
pub fn time_resolved_flux(request: &TraceRequest, seed: u64) -> Result<Vec<BinnedTrace>, SimError> {
    let period = request.validate()?;
    let envelope = request.pump.envelope;
    let pulses = (request.duration / period).round() as u64;
    let bins = ((period / request.bin_width) + 1e-9).floor() as usize;
    let sub = 10usize;
    let dt = request.bin_width / sub as f64;
    let kernel = gaussian_kernel(request.jitter_sigma, dt);
    let margin = kernel.len() / 2;
    let fine_start = request.window_start - margin as f64 * dt;
    let fine_n = bins * sub + 2 * margin;

    let mut out = Vec::with_capacity(request.channels.len());
    for (c, ch) in request.channels.iter().enumerate() {
        let raw = profile(&ch.source, &envelope, request.pump.power, fine_start, dt, fine_n)?;
        let expected: Vec<f64> = (0..bins)
            .map(|b| {
                let mut acc = 0.0;
                for j in 0..sub {
                    let centre = margin + b * sub + j;
                    acc += kernel.iter().enumerate().map(|(k, w)| w * raw[centre + k - margin]).sum::<f64>();
                }
                acc * dt * ch.coefficient * pulses as f64
            })
            .collect();
        let mut rng = rng_for(seed, c as u64);
        let counts = expected
            .iter()
            .map(|&m| if m > 0.0 { Poisson::new(m).map(|p| p.sample(&mut rng) as u64).unwrap_or(0) } else { 0 })
            .collect();
        out.push(BinnedTrace {
            source: ch.source,
            start: request.window_start,
            bin_width: request.bin_width,
            pulses,
            counts,
            expected,
        });
    }
    Ok(out)
}
