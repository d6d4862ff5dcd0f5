use super::dataset::Dataset;
use super::models::{BoseEinsteinModel, LinearModel, PowerModel, SincModel};
use super::solver::{least_squares, FitModel, FitOptions, FitResult, Transform};
use super::FitError;
use crate::model;
use crate::units::CONSTANTS;
use std::f64::consts::TAU;

fn require_points(data: &Dataset, n: usize, what: &str) -> Result<(), FitError> {
    if data.len() < n {
        return Err(FitError::Data(format!("{what} needs at least {n} points, got {}", data.len())));
    }
    Ok(())
}

/// Φ = aP² + bP with a, b ≥ 0. Starts from the exact solve through the
/// lowest and highest non-zero powers.
pub fn fit_power_decomposition(data: &Dataset) -> Result<FitResult, FitError> {
    require_points(data, 3, "power fit")?;
    let mut nz: Vec<_> = data.points().iter().filter(|p| p.x != 0.0).copied().collect();
    nz.sort_by(|a, b| a.x.abs().total_cmp(&b.x.abs()));
    let (lo, hi) = match (nz.first(), nz.last()) {
        (Some(lo), Some(hi)) if lo.x != hi.x => (*lo, *hi),
        _ => return Err(FitError::Data("power fit needs two distinct non-zero powers".into())),
    };
    let det = lo.x * lo.x * hi.x - hi.x * hi.x * lo.x;
    let mut a = (lo.y * hi.x - hi.y * lo.x) / det;
    let mut b = (lo.x * lo.x * hi.y - hi.x * hi.x * lo.y) / det;
    // squared coordinates cannot leave zero, so start strictly inside
    let a_floor = 1e-3 * hi.y.abs().max(f64::MIN_POSITIVE) / (hi.x * hi.x);
    let b_floor = 1e-3 * hi.y.abs().max(f64::MIN_POSITIVE) / hi.x.abs();
    if !(a > a_floor) {
        a = a_floor;
    }
    if !(b > b_floor) {
        b = b_floor;
    }
    let opts = FitOptions::default().with_transforms(vec![Transform::Square, Transform::Square]);
    least_squares(&PowerModel, data, &[a, b], &opts)
}

/// Fixed-parameter choice for the Bose–Einstein fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fixed {
    pub kappa: Option<f64>,
    pub temperature: Option<f64>,
}

/// Everything the Bose–Einstein model needs besides κ and T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoseEinsteinSetup {
    pub length: f64,
    pub power: f64,
    pub pump_carrier: f64,
    pub scale: f64,
}

const FALLBACK_TEMPERATURE: f64 = 300.0;

/// Fits flux densities versus signed detuning; Stokes and anti-Stokes
/// points may be mixed in one dataset (shared κ and T). With both free on
/// one side only, the κ–T correlation is reported in the flags.
pub fn fit_bose_einstein(data: &Dataset, setup: BoseEinsteinSetup, fixed: Fixed) -> Result<FitResult, FitError> {
    let model = BoseEinsteinModel {
        length: setup.length,
        power: setup.power,
        pump_carrier: setup.pump_carrier,
        scale: setup.scale,
        fixed_kappa: fixed.kappa,
        fixed_temperature: fixed.temperature,
    };
    let k = model.names().len();
    if k == 0 {
        return Err(FitError::Data("nothing to fit: kappa and temperature both fixed".into()));
    }
    require_points(data, k + 1, "Bose-Einstein fit")?;
    if data.points().iter().any(|p| p.x == 0.0) {
        return Err(FitError::Model(model::ModelError::ZeroDetuning));
    }
    let prefactor = |nu: f64| setup.scale * setup.length * setup.power / (CONSTANTS.planck * (setup.pump_carrier + nu));
    // reduced data y' = κ(n + s)
    let reduced: Vec<(f64, f64, f64)> = data
        .points()
        .iter()
        .map(|p| {
            let f = prefactor(p.x);
            (p.x, p.y / f, (f / p.sigma).powi(2))
        })
        .collect();

    let init = match (fixed.kappa, fixed.temperature) {
        (None, Some(t)) => vec![kappa_given_t(&reduced, t)?],
        (Some(kappa), None) => vec![t_given_kappa(&reduced, kappa)],
        _ => {
            // n + s ≈ k_BT/(h|ν|) + s − ½: linear in (κT, κ)
            let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(nu, y, w) in &reduced {
                let c1 = CONSTANTS.boltzmann / (CONSTANTS.planck * nu.abs());
                let c2 = model::spontaneous_term(nu) - 0.5;
                s11 += w * c1 * c1;
                s12 += w * c1 * c2;
                s22 += w * c2 * c2;
                r1 += w * c1 * y;
                r2 += w * c2 * y;
            }
            let det = s11 * s22 - s12 * s12;
            let kt = (r1 * s22 - r2 * s12) / det;
            let kappa = (s11 * r2 - s12 * r1) / det;
            if kt > 0.0 && kappa > 0.0 && (kt / kappa).is_finite() {
                vec![kappa, kt / kappa]
            } else {
                vec![kappa_given_t(&reduced, FALLBACK_TEMPERATURE)?, FALLBACK_TEMPERATURE]
            }
        }
    };
    let opts = FitOptions::default().with_transforms(vec![Transform::Square; k]);
    least_squares(&model, data, &init, &opts)
}

fn kappa_given_t(reduced: &[(f64, f64, f64)], t: f64) -> Result<f64, FitError> {
    let (mut num, mut den) = (0.0, 0.0);
    for &(nu, y, w) in reduced {
        let g = model::bose_einstein_occupancy(nu, t)? + model::spontaneous_term(nu);
        num += w * g * y;
        den += w * g * g;
    }
    let kappa = num / den;
    Ok(if kappa > 0.0 { kappa } else { f64::MIN_POSITIVE.sqrt() })
}

fn t_given_kappa(reduced: &[(f64, f64, f64)], kappa: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(nu, y, w) in reduced {
        // invert the Rayleigh–Jeans form for each point
        let t = (y / kappa - model::spontaneous_term(nu) + 0.5) * CONSTANTS.planck * nu.abs() / CONSTANTS.boltzmann;
        num += w * t;
        den += w;
    }
    let t = num / den;
    if t > 0.0 && t.is_finite() {
        t
    } else {
        FALLBACK_TEMPERATURE
    }
}

/// |A·sinc(x(ν))|² with free amplitude A and β₂. The amplitude starts from
/// the point nearest ν = 0; β₂ starts from both roots matching the first
/// half-maximum and the better fit is kept.
pub fn fit_sinc_spectrum(data: &Dataset, length: f64) -> Result<FitResult, FitError> {
    require_points(data, 3, "sinc fit")?;
    if !(length > 0.0) {
        return Err(FitError::Data("waveguide length must be > 0".into()));
    }
    let model = SincModel { length };
    let mut pts = data.points().to_vec();
    pts.sort_by(|a, b| a.x.abs().total_cmp(&b.x.abs()));
    let y0 = pts[0].y;
    if !(y0 > 0.0) {
        return Err(FitError::Data("sinc fit needs a positive value near zero detuning".into()));
    }
    let amplitude = y0.sqrt();
    let half = pts.iter().find(|p| p.y < 0.5 * y0).map(|p| p.x.abs());
    // sinc²(√u) = ½ at u ≈ 1.9448
    const U_HALF: f64 = 1.944_847_4;
    let starts: Vec<f64> = match half {
        Some(nu) => {
            let w2 = (TAU * nu).powi(2);
            let qa = w2 * w2 * length * length / 4.0;
            let qb = w2 * length * amplitude;
            let disc = (qb * qb + 4.0 * qa * U_HALF).sqrt();
            vec![(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)]
        }
        None => {
            // flat data: start where the outermost point would be barely curved
            let nu = pts.last().map(|p| p.x.abs()).unwrap_or(0.0).max(1.0);
            let w2 = (TAU * nu).powi(2);
            vec![-0.1 / (w2 * length * amplitude.max(1e-300))]
        }
    };
    let opts = FitOptions { allow_unconverged: half.is_none(), ..FitOptions::default() }
        .with_transforms(vec![Transform::Square, Transform::Identity]);
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for beta2 in starts {
        match least_squares(&model, data, &[amplitude, beta2], &opts) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.chi_square < b.chi_square) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(FitError::Singular))
}

/// Weighted straight line Φ = slope·T + intercept, with R².
pub fn fit_linear_temperature(data: &Dataset) -> Result<FitResult, FitError> {
    require_points(data, 3, "linear fit")?;
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in data.points() {
        let w = p.sigma.powi(-2);
        sw += w;
        sx += w * p.x;
        sy += w * p.y;
        sxx += w * p.x * p.x;
        sxy += w * p.x * p.y;
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    let init = if slope.is_finite() && intercept.is_finite() { [slope, intercept] } else { [0.0, sy / sw] };
    let mut fit = least_squares(&LinearModel, data, &init, &FitOptions::default())?;
    let mean = sy / sw;
    let total: f64 = data.points().iter().map(|p| ((p.y - mean) / p.sigma).powi(2)).sum();
    fit.r_squared = Some(if total > 0.0 { 1.0 - fit.chi_square / total } else { 1.0 });
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_sim::rng_for;
    use crate::units::THZ;
    use rand_distr::{Distribution, Normal};

    fn with_noise(x: &[f64], f: impl Fn(f64) -> f64, rel: f64, seed: u64) -> Dataset {
        let mut rng = rng_for(seed, 0);
        let n = Normal::new(0.0, 1.0).unwrap();
        let ys: Vec<f64> = x.iter().map(|&x| f(x) * (1.0 + rel * n.sample(&mut rng))).collect();
        let sig: Vec<f64> = x.iter().map(|&x| rel * f(x).abs().max(1e-300)).collect();
        Dataset::from_xys(x, &ys, &sig).unwrap()
    }

    fn powers() -> Vec<f64> {
        (1..=20).map(|i| i as f64 * 0.125e-3).collect()
    }

    #[test]
    fn power_fit_noiseless() {
        let (a, b) = (2.0e9, 3.0e5);
        let x = powers();
        let y: Vec<f64> = x.iter().map(|p| a * p * p + b * p).collect();
        let d = Dataset::from_xys(&x, &y, &[1.0; 20]).unwrap();
        let f = fit_power_decomposition(&d).unwrap();
        assert!((f.params[0] / a - 1.0).abs() < 1e-9);
        assert!((f.params[1] / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_fit_recovers_within_five_sigma() {
        let (a, b) = (2.0e9, 3.0e5);
        for seed in 0..100 {
            let d = with_noise(&powers(), |p| a * p * p + b * p, 0.01, seed);
            let f = fit_power_decomposition(&d).unwrap();
            let s = f.sigmas();
            assert!((f.params[0] - a).abs() < 5.0 * s[0], "seed {seed}");
            assert!((f.params[1] - b).abs() < 5.0 * s[1], "seed {seed}");
        }
    }

    #[test]
    fn power_fit_degenerate_inputs() {
        let p = powers();
        let quad = with_noise(&p, |p| 2.0e9 * p * p, 0.01, 7);
        let f = fit_power_decomposition(&quad).unwrap();
        assert!(f.params[1] <= 2.0 * f.sigmas()[1], "{:?}", f);
        let lin = with_noise(&p, |p| 3.0e5 * p, 0.01, 8);
        let f = fit_power_decomposition(&lin).unwrap();
        assert!(f.params[0] <= 2.0 * f.sigmas()[0], "{:?}", f);
    }

    fn be_setup() -> BoseEinsteinSetup {
        BoseEinsteinSetup { length: 11.2e-3, power: 1.25e-3, pump_carrier: 194.696 * THZ, scale: 1.0 }
    }

    fn be_truth(nu: f64, kappa: f64, t: f64) -> f64 {
        let m = BoseEinsteinModel {
            length: 11.2e-3,
            power: 1.25e-3,
            pump_carrier: 194.696 * THZ,
            scale: 1.0,
            fixed_kappa: None,
            fixed_temperature: None,
        };
        m.value(nu, &[kappa, t]).unwrap()
    }

    fn grid(sign: f64) -> Vec<f64> {
        (0..20).map(|i| sign * (0.4 + 2.1 * i as f64 / 19.0) * THZ).collect()
    }

    #[test]
    fn be_fixed_temperature_within_30_percent() {
        let kappa = 3.5e-20;
        for seed in 0..20 {
            let d = with_noise(&grid(-1.0), |nu| be_truth(nu, kappa, 300.0), 0.05, seed);
            let f = fit_bose_einstein(&d, be_setup(), Fixed { temperature: Some(300.0), kappa: None }).unwrap();
            assert!((f.params[0] / kappa - 1.0).abs() < 0.3);
        }
    }

    #[test]
    fn be_joint_fit_breaks_degeneracy() {
        let x: Vec<f64> = grid(-1.0).into_iter().chain(grid(1.0)).collect();
        for seed in 0..20 {
            let d = with_noise(&x, |nu| be_truth(nu, 3.5e-20, 300.0), 0.02, seed);
            let f = fit_bose_einstein(&d, be_setup(), Fixed::default()).unwrap();
            assert!((f.params[1] / 300.0 - 1.0).abs() < 0.15, "seed {seed}: {:?}", f.params);
        }
    }

    #[test]
    fn be_one_sided_reports_degeneracy() {
        let d = with_noise(&grid(1.0), |nu| be_truth(nu, 3.5e-20, 300.0), 0.02, 1);
        let f = fit_bose_einstein(&d, be_setup(), Fixed::default()).unwrap();
        assert!(f.correlation(0, 1) < -0.9);
        assert!(!f.flags.is_empty());
    }

    #[test]
    fn sinc_noiseless_and_flat() {
        let l = 11.2e-3;
        let m = SincModel { length: l };
        let truth = [300.0 * 2e-3 * l, -1.5e-24];
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.5 * THZ).collect();
        let y: Vec<f64> = x.iter().map(|&nu| m.value(nu, &truth).unwrap()).collect();
        let s: Vec<f64> = y.iter().map(|v| 1e-3 * truth[0] * truth[0] + 1e-3 * v).collect();
        let d = Dataset::from_xys(&x, &y, &s).unwrap();
        let f = fit_sinc_spectrum(&d, l).unwrap();
        assert!((f.params[0] / truth[0] - 1.0).abs() < 1e-6, "{:?}", f.params);
        assert!((f.params[1] / truth[1] - 1.0).abs() < 1e-6, "{:?}", f.params);

        let x: Vec<f64> = (1..20).map(|i| i as f64 * 0.01 * THZ).collect();
        let d = with_noise(&x, |nu| m.value(nu, &truth).unwrap(), 0.01, 3);
        let f = fit_sinc_spectrum(&d, l).unwrap();
        assert!(f.flags.iter().any(|s| s.contains("beta2")), "{:?}", f.flags);
    }

    #[test]
    fn linear_exact() {
        let x = [300.0, 400.0, 500.0, 575.0];
        let d = Dataset::from_xys(&x, &x.map(|t| 2.5 * t + 10.0), &[1.0; 4]).unwrap();
        let f = fit_linear_temperature(&d).unwrap();
        assert!((f.params[0] - 2.5).abs() < 1e-12);
        assert!((f.params[1] - 10.0).abs() < 1e-9);
        assert!((f.r_squared.unwrap() - 1.0).abs() < 1e-15);
    }
}
