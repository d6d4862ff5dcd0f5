use siscatter::event_sim::{
    coincidence_histogram, generate_pair_emissions, snr_estimate, CoincidenceHistogram, EventModel, Origin, OriginMask,
};
use siscatter::instrument::{detected_rate, detections_per_gate};
use siscatter::model::pair_flux_density;
use siscatter::quadrature::integrate_band;
use siscatter::spectrum::DEFAULT_GUARD_HZ;
use siscatter::{BandPair, Channel, DetectorParams, Instrument, ModelError, PumpConfig, WaveguideParams};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn setup(power: f64) -> (WaveguideParams, PumpConfig, BandPair, Instrument) {
    let wg = WaveguideParams::default();
    let pump = PumpConfig::default().with_power(power);
    let inst = Instrument::reference_setup(&wg, pump.carrier_wavelength);
    (wg, pump, BandPair::reference_setup(), inst)
}

fn free_running(inst: &mut Instrument, dark_rate: f64, dead_time: f64, jitter: f64) {
    for ch in Channel::BOTH {
        let d = *inst.detector(ch);
        *inst.detector_mut(ch) = DetectorParams::free_running(d.efficiency, dark_rate, dead_time, jitter);
    }
}

const DARK_ONLY: OriginMask = OriginMask { pair: false, thermal: false, raman: false, dark: true };

#[test]
fn counts_match_analytic_rate() {
    let (wg, pump, bands, inst) = setup(1.25e-3);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
    for ch in Channel::BOTH {
        let r = detected_rate(model.mean_incident(ch), inst.detector(ch));
        let duration = 2e4 / r;
        let n = model.simulate(duration, 11, 0).unwrap().count(ch, None) as f64;
        let mean = r * duration;
        assert!((n - mean).abs() < 4.0 * mean.sqrt(), "{ch:?}: {n} vs {mean}");
    }
}

#[test]
fn same_seed_gives_identical_histograms() {
    let (wg, pump, bands, inst) = setup(1.25e-3);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
    let a = model.simulate_batches(0.5, 4, 99).unwrap();
    let b = model.simulate_batches(0.5, 4, 99).unwrap();
    assert_eq!(a, b);
    let ha = coincidence_histogram(&a, 1e-9, 31e-9).unwrap();
    let hb = coincidence_histogram(&b, 1e-9, 31e-9).unwrap();
    assert_eq!(ha, hb);
    let c = model.simulate_batches(0.5, 4, 100).unwrap();
    assert_ne!(a, c);
}

#[test]
fn pairs_without_jitter_land_in_zero_bin() {
    let (wg, pump, bands, mut inst) = setup(0.05e-3);
    free_running(&mut inst, 0.0, 10e-9, 0.0);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap().with_mask(OriginMask::PAIRS_ONLY);
    let stream = model.simulate(5.0, 3, 0).unwrap();
    let hist = coincidence_histogram(&stream, 1e-9, 41e-9).unwrap();
    assert!(hist.peak() > 50, "peak {}", hist.peak());
    assert_eq!(hist.peak(), hist.total(), "{:?}", hist.counts);
}

#[test]
fn dark_only_histogram_is_flat() {
    let (wg, pump, bands, mut inst) = setup(1.25e-3);
    free_running(&mut inst, 1e6, 10e-9, 100e-12);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap().with_mask(DARK_ONLY);
    let stream = model.simulate_batches(0.4, 4, 5).unwrap();
    let hist = coincidence_histogram(&stream, 1e-9, 101e-9).unwrap();
    assert!(hist.total() > 100_000, "{}", hist.total());
    let mean = hist.total() as f64 / hist.counts.len() as f64;
    let chi2: f64 = hist.counts.iter().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
    let dof = (hist.counts.len() - 1) as f64;
    let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} vs {critical}");
}

#[test]
fn car_matches_rate_prediction() {
    let (wg, pump, bands, mut inst) = setup(0.5e-3);
    free_running(&mut inst, 100.0, 10e-9, 0.0);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
    let bin = 1e-9;
    let stream = model.simulate_batches(2.0, 8, 21).unwrap();
    let hist = coincidence_histogram(&stream, bin, 41e-9).unwrap();
    let est = snr_estimate(&hist).unwrap();

    let carrier = pump.carrier_frequency();
    let eta = [inst.stokes_detector.efficiency, inst.anti_stokes_detector.efficiency];
    // both photons of a pair must pass their own arm
    let joint = integrate_band(
        |nu| {
            Ok::<_, ModelError>(
                pair_flux_density(nu, &wg, pump.power)
                    * inst.transmission(Channel::Stokes, nu, carrier)
                    * inst.transmission(Channel::AntiStokes, -nu, carrier),
            )
        },
        &bands.stokes,
        DEFAULT_GUARD_HZ,
    )
    .unwrap();
    // a pair photon only registers if it is the first click of its gate
    let first = |ch: Channel| {
        let mu = detections_per_gate(model.mean_incident(ch), inst.detector(ch));
        -(-mu).exp_m1() / mu
    };
    let coincidences = eta[0] * eta[1] * joint * first(Channel::Stokes) * first(Channel::AntiStokes);
    let singles: Vec<f64> =
        Channel::BOTH.iter().map(|&ch| detected_rate(model.mean_incident(ch), inst.detector(ch))).collect();
    let accidentals = singles[0] * singles[1] * bin;
    let predicted = (coincidences + accidentals) / accidentals;
    assert!((est.car - predicted).abs() < 3.0 * est.car_sigma, "car {} ± {} vs {predicted}", est.car, est.car_sigma);
}

#[test]
fn doubling_power_at_fixed_noise_raises_snr() {
    let noise = {
        let (wg, pump, bands, inst) = setup(0.25e-3);
        EventModel::new(&wg, &pump, &bands, &inst, None).unwrap().thermal_incident
    };
    let snr = |power: f64| {
        let (wg, pump, bands, inst) = setup(power);
        let mut model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
        model.thermal_incident = noise;
        let stream = model.simulate_batches(20.0, 8, 4).unwrap();
        snr_estimate(&coincidence_histogram(&stream, 1e-9, 31e-9).unwrap()).unwrap().snr
    };
    let low = snr(0.25e-3);
    let high = snr(0.5e-3);
    assert!(high > low, "{high} <= {low}");
}

#[test]
fn histogram_merge_matches_joint_accumulation() {
    let (wg, pump, bands, inst) = setup(1.25e-3);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
    let parts: Vec<_> = (0..3).map(|k| model.simulate(0.5, 8, k).unwrap()).collect();
    let hists: Vec<CoincidenceHistogram> =
        parts.iter().map(|s| coincidence_histogram(s, 1e-9, 21e-9).unwrap()).collect();
    let left = hists[0].merge(&hists[1]).unwrap().merge(&hists[2]).unwrap();
    let right = hists[0].merge(&hists[1].merge(&hists[2]).unwrap()).unwrap();
    assert_eq!(left, right);
    let mut joint = CoincidenceHistogram::empty(1e-9, 21e-9).unwrap();
    for s in &parts {
        joint.accumulate(s);
    }
    assert_eq!(joint, left);
}

#[test]
fn detection_is_first_click_per_gate() {
    let (wg, pump, bands, inst) = setup(1.25e-3);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
    let stream = model.simulate(2.0, 17, 0).unwrap();
    for ch in Channel::BOTH {
        let det = inst.detector(ch);
        // jitter is far below the gate spacing, so clicks sit one period apart or more
        let min_gap = 1.0 / det.gate_rate - det.gate_width - 20.0 * det.jitter_sigma;
        let times = stream.times(ch);
        assert!(times.len() > 100);
        assert!(times.windows(2).all(|w| w[1] - w[0] > min_gap));
    }
    let origins: usize = Origin::ALL.iter().map(|&o| stream.count(Channel::Stokes, Some(o))).sum();
    assert_eq!(origins, stream.count(Channel::Stokes, None));
}

#[test]
fn emitted_pairs_conserve_energy() {
    let (wg, pump, bands, inst) = setup(1.25e-3);
    let model = EventModel::new(&wg, &pump, &bands, &inst, None).unwrap();
    let pairs = generate_pair_emissions(&model, 1e-3, 2);
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert!((p.stokes_detuning + p.anti_stokes_detuning).abs() < 1e-3);
        assert!(bands.stokes.contains(p.stokes_detuning));
    }
}
