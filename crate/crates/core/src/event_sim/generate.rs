use super::poisson::{poisson_arrivals, LiveTimeline};
use super::stream::{Event, EventStream, Origin};
use super::{rng_for, SimError, SimRng};
use crate::instrument::{Channel, Instrument};
use crate::model::{self, ModelError, PumpConfig, PumpEnvelope, WaveguideParams};
use crate::quadrature::integrate_band;
use crate::spectrum::{BandPair, SpectralBand, TabulatedSpectrum, DEFAULT_GUARD_HZ};
use rand::Rng;
use rand_distr::{Distribution, Normal};

const PAIR_TABLE_POINTS: usize = 4096;

/// Which origins contribute events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OriginMask {
    pub pair: bool,
    pub thermal: bool,
    pub raman: bool,
    pub dark: bool,
}

impl OriginMask {
    pub const ALL: OriginMask = OriginMask { pair: true, thermal: true, raman: true, dark: true };
    pub const PAIRS_ONLY: OriginMask = OriginMask { pair: true, thermal: false, raman: false, dark: false };
    pub const NONE: OriginMask = OriginMask { pair: false, thermal: false, raman: false, dark: false };

    pub fn allows(&self, origin: Origin) -> bool {
        match origin {
            Origin::Pair => self.pair,
            Origin::Thermal => self.thermal,
            Origin::Raman => self.raman,
            Origin::Dark => self.dark,
        }
    }
}

impl Default for OriginMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// Inverse-CDF sampler of Stokes detunings from the pair spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSampler {
    detunings: Vec<f64>,
    cdf: Vec<f64>,
}

impl PairSampler {
    /// Tabulates `density` on `points` equally spaced detunings across `band`.
    pub fn tabulate(band: &SpectralBand, points: usize, density: impl Fn(f64) -> f64) -> Option<Self> {
        let n = points.max(2);
        let step = band.width() / (n - 1) as f64;
        let detunings: Vec<f64> = (0..n).map(|i| band.detuning_min + i as f64 * step).collect();
        let values: Vec<f64> = detunings.iter().map(|&d| density(d)).collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        for i in 1..n {
            let last = cdf[i - 1];
            cdf.push(last + 0.5 * (values[i - 1] + values[i]) * step);
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0 && total.is_finite()) {
            return None;
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Some(Self { detunings, cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.detunings[i - 1] + t * (self.detunings[i] - self.detunings[i - 1])
    }
}

/// One generated photon pair, before any loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEmission {
    pub time: f64,
    pub stokes_detuning: f64,
    pub anti_stokes_detuning: f64,
}

/// Analytic source rates at the detector inputs, ready to be realised as
/// point processes.
#[derive(Debug, Clone)]
pub struct EventModel {
    pub envelope: PumpEnvelope,
    pump_carrier: f64,
    instrument: Instrument,
    /// thermal photons per second reaching each detector, at peak power
    pub thermal_incident: [f64; 2],
    pub raman_incident: [f64; 2],
    /// pairs per second with the Stokes photon in the Stokes band, at peak power
    pub pair_rate: f64,
    /// pair photons per second reaching each detector, at peak power
    pub pair_incident: [f64; 2],
    sampler: Option<PairSampler>,
    /// largest probability that at least one photon of a pair is detected
    pair_any_max: f64,
    pub mask: OriginMask,
}

fn idx(channel: Channel) -> usize {
    match channel {
        Channel::Stokes => 0,
        Channel::AntiStokes => 1,
    }
}

impl EventModel {
    pub fn new(
        wg: &WaveguideParams,
        pump: &PumpConfig,
        bands: &BandPair,
        instrument: &Instrument,
        raman: Option<&TabulatedSpectrum>,
    ) -> Result<Self, SimError> {
        wg.validate()?;
        pump.validate()?;
        bands.validate(DEFAULT_GUARD_HZ)?;
        instrument.validate().map_err(|e| SimError::Config(e.to_string()))?;
        let carrier = pump.carrier_frequency();
        let power = pump.power;

        let mut thermal_incident = [0.0; 2];
        let mut raman_incident = [0.0; 2];
        let mut pair_incident = [0.0; 2];
        for ch in Channel::BOTH {
            let band = bands.get(ch);
            let t = |nu: f64| instrument.transmission(ch, nu, carrier);
            thermal_incident[idx(ch)] = integrate_band(
                |nu| Ok::<_, ModelError>(model::thermal_scatter_flux_density(nu, wg, power, carrier)? * t(nu)),
                band,
                DEFAULT_GUARD_HZ,
            )?;
            if let Some(table) = raman {
                raman_incident[idx(ch)] = integrate_band(
                    |nu| Ok::<_, ModelError>(model::raman_fiber_noise_density(nu, table, power)? * t(nu)),
                    band,
                    DEFAULT_GUARD_HZ,
                )?;
            }
            // partner photon of a pair sits at the mirrored detuning
            pair_incident[idx(ch)] = integrate_band(
                |nu| {
                    let partner = if ch == Channel::Stokes { nu } else { -nu };
                    Ok::<_, ModelError>(model::pair_flux_density(nu, wg, power) * t(partner))
                },
                &bands.stokes,
                DEFAULT_GUARD_HZ,
            )?;
        }
        let pair_rate = integrate_band(
            |nu| Ok::<_, ModelError>(model::pair_flux_density(nu, wg, power)),
            &bands.stokes,
            DEFAULT_GUARD_HZ,
        )?;
        let sampler =
            PairSampler::tabulate(&bands.stokes, PAIR_TABLE_POINTS, |nu| model::pair_flux_density(nu, wg, power));

        let mut out = Self {
            envelope: pump.envelope,
            pump_carrier: carrier,
            instrument: instrument.clone(),
            thermal_incident,
            raman_incident,
            pair_rate,
            pair_incident,
            sampler,
            pair_any_max: 0.0,
            mask: OriginMask::ALL,
        };
        if let Some(sampler) = &out.sampler {
            out.pair_any_max = sampler
                .detunings
                .iter()
                .map(|&nu| {
                    let (ps, pa) = out.pair_detection_probabilities(nu);
                    1.0 - (1.0 - ps) * (1.0 - pa)
                })
                .fold(0.0, f64::max)
                .min(1.0);
        }
        Ok(out)
    }

    /// Detection probabilities of the Stokes photon at `stokes_detuning`
    /// and of its anti-Stokes partner.
    fn pair_detection_probabilities(&self, stokes_detuning: f64) -> (f64, f64) {
        let p = |ch: Channel, nu: f64| {
            self.instrument.detector(ch).efficiency * self.instrument.transmission(ch, nu, self.pump_carrier)
        };
        (p(Channel::Stokes, stokes_detuning), p(Channel::AntiStokes, -stokes_detuning))
    }

    pub fn with_mask(mut self, mask: OriginMask) -> Self {
        self.mask = mask;
        self
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    /// Time-averaged photon flux reaching `channel`'s detector (s⁻¹).
    pub fn mean_incident(&self, channel: Channel) -> f64 {
        let i = idx(channel);
        let mut total = 0.0;
        if self.mask.thermal {
            total += self.thermal_incident[i] * self.envelope.mean_shape_power(1);
        }
        if self.mask.raman {
            total += self.raman_incident[i] * self.envelope.mean_shape_power(1);
        }
        if self.mask.pair {
            total += self.pair_incident[i] * self.envelope.mean_shape_power(2);
        }
        total
    }

    fn timeline(&self, duration: f64) -> LiveTimeline {
        let s = self.instrument.stokes_detector;
        let a = self.instrument.anti_stokes_detector;
        if s.gate_rate == a.gate_rate && s.gate_width == a.gate_width && !s.is_free_running() {
            LiveTimeline::gated(1.0 / s.gate_rate, s.gate_width, duration)
        } else {
            LiveTimeline::continuous(duration)
        }
    }

    /// Keeps arrivals with probability shape(t)^power.
    fn envelope_thin(&self, times: Vec<f64>, power: i32, rng: &mut SimRng) -> Vec<f64> {
        if matches!(self.envelope, PumpEnvelope::Cw) {
            return times;
        }
        times.into_iter().filter(|&t| rng.random::<f64>() < self.envelope.shape(t).powi(power)).collect()
    }

    /// Pair emissions over `duration` for batch `stream` of `seed`.
    pub fn pair_emissions(&self, duration: f64, rng: &mut SimRng) -> Vec<PairEmission> {
        let Some(sampler) = &self.sampler else {
            return Vec::new();
        };
        let times = poisson_arrivals(self.pair_rate, &self.timeline(duration), rng);
        let times = self.envelope_thin(times, 2, rng);
        times
            .into_iter()
            .map(|time| {
                let stokes_detuning = sampler.sample(rng);
                PairEmission { time, stokes_detuning, anti_stokes_detuning: -stokes_detuning }
            })
            .collect()
    }

    /// One batch of detection events.
    pub fn simulate(&self, duration: f64, seed: u64, stream: u64) -> Result<EventStream, SimError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(SimError::Config(format!("duration must be > 0, got {duration}")));
        }
        let mut rng = rng_for(seed, stream);
        let timeline = self.timeline(duration);
        let mut candidates: [Vec<(f64, Origin)>; 2] = [Vec::new(), Vec::new()];

        if let (true, Some(sampler)) = (self.mask.pair && self.pair_any_max > 0.0, &self.sampler) {
            // Only pairs with at least one detected photon are drawn: candidates
            // at rate R·p_max, accepted with p_any(ν)/p_max, and the accepted
            // uniform split into both / Stokes only / anti-Stokes only.
            let times = poisson_arrivals(self.pair_rate * self.pair_any_max, &timeline, &mut rng);
            for time in self.envelope_thin(times, 2, &mut rng) {
                let nu = sampler.sample(&mut rng);
                let (ps, pa) = self.pair_detection_probabilities(nu);
                let any = 1.0 - (1.0 - ps) * (1.0 - pa);
                let u = rng.random::<f64>() * self.pair_any_max;
                if u >= any {
                    continue;
                }
                if u < ps {
                    candidates[0].push((time, Origin::Pair));
                }
                if u < ps * pa || u >= ps {
                    candidates[1].push((time, Origin::Pair));
                }
            }
        }
        for ch in Channel::BOTH {
            let det = *self.instrument.detector(ch);
            let i = idx(ch);
            for (origin, incident) in
                [(Origin::Thermal, self.thermal_incident[i]), (Origin::Raman, self.raman_incident[i])]
            {
                if !self.mask.allows(origin) {
                    continue;
                }
                let times = poisson_arrivals(incident * det.efficiency, &timeline, &mut rng);
                let times = self.envelope_thin(times, 1, &mut rng);
                candidates[i].extend(times.into_iter().map(|t| (t, origin)));
            }
            if self.mask.dark && det.dark_rate > 0.0 {
                // quoted dark rates are observed rates, i.e. per open gate time
                let in_gate = det.dark_rate / det.duty_cycle();
                let times = poisson_arrivals(in_gate, &timeline, &mut rng);
                candidates[i].extend(times.into_iter().map(|t| (t, Origin::Dark)));
            }
        }

        let mut events = Vec::new();
        for ch in Channel::BOTH {
            let det = *self.instrument.detector(ch);
            let list = &mut candidates[idx(ch)];
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            let jitter = (det.jitter_sigma > 0.0).then(|| Normal::new(0.0, det.jitter_sigma).expect("finite sigma"));
            let mut last_gate: Option<u64> = None;
            for &(t, origin) in list.iter() {
                let gate = (t * det.gate_rate).floor();
                let offset = t - gate / det.gate_rate;
                if !det.is_free_running() && offset >= det.gate_width {
                    continue;
                }
                let gate = gate as u64;
                if last_gate == Some(gate) {
                    continue;
                }
                last_gate = Some(gate);
                let time = t + jitter.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                events.push(Event { time, channel: ch, origin });
            }
        }
        Ok(EventStream::from_events(events, duration))
    }

    /// `batches` consecutive batches of `duration` each, concatenated in time.
    /// Batches run in parallel; the result does not depend on scheduling.
    pub fn simulate_batches(&self, duration: f64, batches: usize, seed: u64) -> Result<EventStream, SimError> {
        let parts = crate::par::map_range(batches, |b| self.simulate(duration, seed, b as u64));
        let mut total = EventStream::default();
        for part in parts {
            total.append_shifted(&part?);
        }
        Ok(total)
    }
}

/// Detection events for a configured waveguide, pump and instrument.
pub fn generate_events(
    wg: &WaveguideParams,
    pump: &PumpConfig,
    bands: &BandPair,
    instrument: &Instrument,
    raman: Option<&TabulatedSpectrum>,
    duration: f64,
    seed: u64,
) -> Result<EventStream, SimError> {
    EventModel::new(wg, pump, bands, instrument, raman)?.simulate(duration, seed, 0)
}

/// Pair emissions only (no losses), for bookkeeping checks.
pub fn generate_pair_emissions(model: &EventModel, duration: f64, seed: u64) -> Vec<PairEmission> {
    let mut rng = rng_for(seed, 0);
    model.pair_emissions(duration, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::DetectorParams;

    fn setup() -> (WaveguideParams, PumpConfig, BandPair, Instrument) {
        let wg = WaveguideParams::default();
        let pump = PumpConfig::default();
        let inst = Instrument::reference_setup(&wg, pump.carrier_wavelength);
        (wg, pump, BandPair::reference_setup(), inst)
    }

    #[test]
    fn zero_rates_give_empty_stream() {
        let (wg, pump, bands, mut inst) = setup();
        inst.stokes_detector.dark_rate = 0.0;
        inst.anti_stokes_detector.dark_rate = 0.0;
        let s = generate_events(&wg, &pump.with_power(0.0), &bands, &inst, None, 1.0, 1).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let (wg, pump, bands, inst) = setup();
        let a = generate_events(&wg, &pump, &bands, &inst, None, 0.05, 42).unwrap();
        let b = generate_events(&wg, &pump, &bands, &inst, None, 0.05, 42).unwrap();
        let c = generate_events(&wg, &pump, &bands, &inst, None, 0.05, 43).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn events_respect_gates_and_order() {
        let (wg, pump, bands, mut inst) = setup();
        inst.stokes_detector.jitter_sigma = 0.0;
        inst.anti_stokes_detector.jitter_sigma = 0.0;
        let s = generate_events(&wg, &pump, &bands, &inst, None, 0.2, 5).unwrap();
        assert!(s.events().windows(2).all(|w| w[0].time <= w[1].time));
        let det = inst.stokes_detector;
        for ch in Channel::BOTH {
            let times = s.times(ch);
            let gates: Vec<u64> = times.iter().map(|t| (t * det.gate_rate).floor() as u64).collect();
            assert!(gates.windows(2).all(|g| g[0] < g[1]), "one click per gate");
            for t in times {
                assert!(t - (t * det.gate_rate).floor() / det.gate_rate < det.gate_width);
            }
        }
    }

    #[test]
    fn pair_bookkeeping() {
        let (wg, pump, bands, inst) = setup();
        let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
        let pairs = generate_pair_emissions(&model, 0.01, 9);
        assert!(pairs.len() > 100);
        for p in pairs {
            assert!(bands.stokes.contains(p.stokes_detuning));
            assert_eq!(p.anti_stokes_detuning, -p.stokes_detuning);
        }
    }

    #[test]
    fn sampler_follows_density() {
        let band = SpectralBand::new(0.0, 1.0).unwrap();
        let sampler = PairSampler::tabulate(&band, 4096, |x| 2.0 * x).unwrap();
        let mut rng = rng_for(11, 0);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sampler.sample(&mut rng)).sum::<f64>() / n as f64;
        // E[x] = 2/3 for density 2x; sd of the mean ≈ 0.236/√n
        assert!((mean - 2.0 / 3.0).abs() < 5.0 * 0.236 / (n as f64).sqrt());
    }

    #[test]
    fn bad_bands_rejected() {
        let (wg, pump, _, inst) = setup();
        let swapped = BandPair {
            stokes: BandPair::reference_setup().anti_stokes,
            anti_stokes: BandPair::reference_setup().stokes,
        };
        assert!(EventModel::new(&wg, &pump, &swapped, &inst, None).is_err());
        let free = DetectorParams::free_running(0.1, 10.0, 10e-9, 0.0);
        let mut inst2 = inst.clone();
        inst2.stokes_detector = free;
        inst2.anti_stokes_detector = free;
        assert!(generate_events(&wg, &pump, &BandPair::reference_setup(), &inst2, None, -1.0, 0).is_err());
    }
}
