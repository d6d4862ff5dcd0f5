use super::solver::FitModel;
use super::FitError;
use crate::model::{self, sinc_squared, sinc_squared_derivative};
use crate::units::CONSTANTS;
use std::f64::consts::TAU;

/// Φ(P) = aP² + bP.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerModel;

impl FitModel for PowerModel {
    fn names(&self) -> Vec<&'static str> {
        vec!["a", "b"]
    }

    fn value(&self, x: f64, p: &[f64]) -> Result<f64, FitError> {
        Ok(p[0] * x * x + p[1] * x)
    }

    fn gradient(&self, x: f64, _: &[f64]) -> Result<Vec<f64>, FitError> {
        Ok(vec![x * x, x])
    }
}

/// Φ = m·T + c.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearModel;

impl FitModel for LinearModel {
    fn names(&self) -> Vec<&'static str> {
        vec!["slope", "intercept"]
    }

    fn value(&self, x: f64, p: &[f64]) -> Result<f64, FitError> {
        Ok(p[0] * x + p[1])
    }

    fn gradient(&self, x: f64, _: &[f64]) -> Result<Vec<f64>, FitError> {
        Ok(vec![x, 1.0])
    }
}

/// Thermal flux density versus signed detuning,
/// scale·κLP(n(ν,T) + s)/(h(ν₀+ν)). κ or T may be held fixed, in which
/// case it is dropped from the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoseEinsteinModel {
    /// m
    pub length: f64,
    /// W
    pub power: f64,
    /// Hz
    pub pump_carrier: f64,
    /// collection efficiency applied to the emitted density
    pub scale: f64,
    pub fixed_kappa: Option<f64>,
    pub fixed_temperature: Option<f64>,
}

impl BoseEinsteinModel {
    fn split(&self, p: &[f64]) -> (f64, f64) {
        match (self.fixed_kappa, self.fixed_temperature) {
            (None, None) => (p[0], p[1]),
            (Some(k), None) => (k, p[0]),
            (None, Some(t)) => (p[0], t),
            (Some(k), Some(t)) => (k, t),
        }
    }

    fn prefactor(&self, detuning: f64) -> f64 {
        self.scale * self.length * self.power / (CONSTANTS.planck * (self.pump_carrier + detuning))
    }
}

impl FitModel for BoseEinsteinModel {
    fn names(&self) -> Vec<&'static str> {
        let mut n = Vec::new();
        if self.fixed_kappa.is_none() {
            n.push("kappa");
        }
        if self.fixed_temperature.is_none() {
            n.push("temperature");
        }
        n
    }

    fn value(&self, x: f64, p: &[f64]) -> Result<f64, FitError> {
        let (kappa, t) = self.split(p);
        let occ = model::bose_einstein_occupancy(x, t)? + model::spontaneous_term(x);
        Ok(kappa * occ * self.prefactor(x))
    }

    fn gradient(&self, x: f64, p: &[f64]) -> Result<Vec<f64>, FitError> {
        let (kappa, t) = self.split(p);
        let n = model::bose_einstein_occupancy(x, t)?;
        let pre = self.prefactor(x);
        let mut g = Vec::with_capacity(2);
        if self.fixed_kappa.is_none() {
            g.push((n + model::spontaneous_term(x)) * pre);
        }
        if self.fixed_temperature.is_none() {
            // ∂n/∂T = n(n+1)·x/T with x = h|ν|/k_BT
            let xr = model::reduced_energy(x, t);
            g.push(kappa * pre * n * (n + 1.0) * xr / t);
        }
        Ok(g)
    }
}

/// Pair spectrum A²·sinc²(x(ν)) with A = γPL and
/// x² = β₂²ω⁴L²/4 + β₂ω²L·A, parameters (A, β₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincModel {
    /// m
    pub length: f64,
}

impl SincModel {
    fn u(&self, detuning: f64, amplitude: f64, beta2: f64) -> (f64, f64) {
        let w2 = (TAU * detuning).powi(2);
        let l = self.length;
        (beta2 * beta2 * w2 * w2 * l * l / 4.0 + beta2 * w2 * l * amplitude, w2)
    }
}

impl FitModel for SincModel {
    fn names(&self) -> Vec<&'static str> {
        vec!["amplitude", "beta2"]
    }

    fn value(&self, x: f64, p: &[f64]) -> Result<f64, FitError> {
        let (u, _) = self.u(x, p[0], p[1]);
        Ok(p[0] * p[0] * sinc_squared(u))
    }

    fn gradient(&self, x: f64, p: &[f64]) -> Result<Vec<f64>, FitError> {
        let (a, b) = (p[0], p[1]);
        let (u, w2) = self.u(x, a, b);
        let l = self.length;
        let s = sinc_squared(u);
        let ds = sinc_squared_derivative(u);
        let du_da = b * w2 * l;
        let du_db = b * w2 * w2 * l * l / 2.0 + w2 * l * a;
        Ok(vec![2.0 * a * s + a * a * ds * du_da, a * a * ds * du_db])
    }
}
