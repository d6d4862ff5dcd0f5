use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use siscatter::fitting::{
    fit_bose_einstein, fit_linear_temperature, fit_power_decomposition, fit_sinc_spectrum, BoseEinsteinModel,
    BoseEinsteinSetup, Dataset, FitModel, Fixed, LinearModel,
};
use siscatter::model::{bose_einstein_occupancy, pair_flux_density, rayleigh_jeans_occupancy, spontaneous_term};
use siscatter::units::THZ;
use siscatter::WaveguideParams;

const CARRIER: f64 = 194.696 * THZ;

fn noisy(xs: &[f64], f: impl Fn(f64) -> f64, rel: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let sigmas: Vec<f64> = ys.iter().map(|y| rel * y.abs()).collect();
    let noisy: Vec<f64> = ys.iter().zip(&sigmas).map(|(y, s)| y + s * unit.sample(&mut rng)).collect();
    Dataset::from_xys(xs, &noisy, &sigmas).unwrap()
}

fn be_model(fixed_kappa: Option<f64>, fixed_temperature: Option<f64>) -> BoseEinsteinModel {
    BoseEinsteinModel {
        length: 11.2e-3,
        power: 1.25e-3,
        pump_carrier: CARRIER,
        scale: 1.0,
        fixed_kappa,
        fixed_temperature,
    }
}

#[test]
fn one_sigma_coverage_of_power_fits() {
    let (a, b) = (1.7e9, 4.1e6);
    let powers: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1e-3).collect();
    let mut covered = [0usize; 2];
    for seed in 0..200 {
        // constant absolute noise so the error bars do not depend on the draw
        let sigma = 0.01 * (a * 2e-3 * 2e-3 + b * 2e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let ys: Vec<f64> = powers.iter().map(|&p| a * p * p + b * p + sigma * unit.sample(&mut rng)).collect();
        let d = Dataset::from_xys(&powers, &ys, &vec![sigma; powers.len()]).unwrap();
        let f = fit_power_decomposition(&d).unwrap();
        for (k, truth) in [a, b].into_iter().enumerate() {
            if (f.params[k] - truth).abs() <= f.sigmas()[k] {
                covered[k] += 1;
            }
        }
    }
    for c in covered {
        assert!((120..=150).contains(&c), "coverage {c}/200");
    }
}

#[test]
fn kappa_temperature_trade_leaves_rayleigh_jeans_flux_unchanged() {
    let (kappa, t) = (3.5e-20, 300.0);
    for nu in [0.4 * THZ, 1.3 * THZ, 2.5 * THZ] {
        let a = kappa * rayleigh_jeans_occupancy(nu, t).unwrap();
        let b = 2.0 * kappa * rayleigh_jeans_occupancy(nu, t / 2.0).unwrap();
        assert!((b / a - 1.0).abs() < 1e-12);
    }
    // Bose–Einstein agrees once h|ν| ≪ k_BT
    let m = be_model(None, None);
    for nu in [-2e9, 2e9] {
        let a = m.value(nu, &[kappa, t]).unwrap();
        let b = m.value(nu, &[2.0 * kappa, t / 2.0]).unwrap();
        assert!((b / a - 1.0).abs() < 1e-3, "{nu}: {}", b / a);
    }
}

#[test]
fn noiseless_bose_einstein_recovers_parameters() {
    let m = be_model(None, None);
    let xs: Vec<f64> = (0..20).map(|i| (0.4 + 2.1 * i as f64 / 19.0) * THZ).flat_map(|nu| [-nu, nu]).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| m.value(x, &[3.5e-20, 300.0]).unwrap()).collect();
    let sigmas: Vec<f64> = ys.iter().map(|y| 0.01 * y).collect();
    let d = Dataset::from_xys(&xs, &ys, &sigmas).unwrap();
    let setup = BoseEinsteinSetup { length: 11.2e-3, power: 1.25e-3, pump_carrier: CARRIER, scale: 1.0 };
    let f = fit_bose_einstein(&d, setup, Fixed::default()).unwrap();
    assert!((f.param("kappa").unwrap() / 3.5e-20 - 1.0).abs() < 1e-6);
    assert!((f.param("temperature").unwrap() / 300.0 - 1.0).abs() < 1e-6);
}

#[test]
fn linear_fit_of_bose_einstein_density_has_small_curvature() {
    // h|ν|/k_BT = 0.4 at the coldest point
    let nu = 0.4 * siscatter::CONSTANTS.boltzmann * 300.0 / siscatter::CONSTANTS.planck;
    let temps: Vec<f64> = (0..12).map(|i| 300.0 + 25.0 * i as f64).collect();
    let ys: Vec<f64> = temps.iter().map(|&t| bose_einstein_occupancy(nu, t).unwrap() + spontaneous_term(nu)).collect();
    let d = Dataset::from_xys(&temps, &ys, &vec![1.0; temps.len()]).unwrap();
    let f = fit_linear_temperature(&d).unwrap();
    let worst = temps
        .iter()
        .zip(&ys)
        .map(|(&t, &y)| ((y - LinearModel.value(t, &f.params).unwrap()) / y).abs())
        .fold(0.0, f64::max);
    assert!(worst > 0.0 && worst < 0.03, "{worst}");
    assert!(f.r_squared.unwrap() > 0.999);
}

#[test]
fn sinc_fit_recovers_amplitude_at_ten_percent_noise() {
    let wg = WaveguideParams::default();
    let power = 1.25e-3;
    let amplitude = wg.gamma * power * wg.length;
    let xs: Vec<f64> = (1..=20).map(|i| 2.5 * THZ * i as f64 / 20.0).collect();
    for seed in 0..20 {
        let d = noisy(&xs, |nu| pair_flux_density(nu, &wg, power), 0.10, seed);
        let f = fit_sinc_spectrum(&d, wg.length).unwrap();
        let got = f.param("amplitude").unwrap();
        assert!((got / amplitude - 1.0).abs() < 0.10, "seed {seed}: {got} vs {amplitude}");
    }
}

#[test]
fn dataset_survives_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let d = noisy(&[1.0, 2.0, 3.0, 4.0], |x| 3.0 * x + 1.0, 0.05, 7);
    d.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = Dataset::from_csv_path(&path).unwrap();
    assert_eq!(back.points(), d.points());
    let f = fit_linear_temperature(&back).unwrap();
    assert!((f.params[0] - 3.0).abs() < 5.0 * f.sigmas()[0]);
}
