use super::edges::Trace;
use super::SimError;
use crate::model::PumpEnvelope;
use serde::{Deserialize, Serialize};

/// Weights of linear and two-photon carrier generation, dN/dt = g₁P + g₂P² − N/τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierGeneration {
    pub linear: f64,
    pub quadratic: f64,
}

impl Default for CarrierGeneration {
    fn default() -> Self {
        Self { linear: 1.0, quadratic: 0.0 }
    }
}

impl CarrierGeneration {
    pub fn rate(&self, power: f64) -> f64 {
        self.linear * power + self.quadratic * power * power
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarrierState {
    /// arbitrary units
    pub density: f64,
    /// s
    pub tau: f64,
}

impl CarrierState {
    pub fn new(tau: f64) -> Result<Self, SimError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SimError::Config(format!("carrier lifetime must be > 0, got {tau}")));
        }
        Ok(Self { density: 0.0, tau })
    }

    pub fn steady_state(&self, generation: f64) -> f64 {
        self.tau * generation
    }

    /// Exact update over `dt` with constant generation.
    pub fn step(&mut self, generation: f64, dt: f64) {
        let target = self.steady_state(generation);
        self.density = target + (self.density - target) * (-dt / self.tau).exp();
    }
}

/// N(t) sampled every `dt` over one pump period starting at t = `start`
/// (relative to a pulse start). The envelope is held constant at its
/// midpoint value within each step; one period of warm-up removes the
/// initial condition. CW runs start at the fixed point.
pub fn carrier_density_trace(
    envelope: &PumpEnvelope,
    peak_power: f64,
    tau: f64,
    generation: CarrierGeneration,
    start: f64,
    dt: f64,
    samples: usize,
) -> Result<Trace, SimError> {
    envelope.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::Config(format!("time step must be > 0, got {dt}")));
    }
    let mut state = CarrierState::new(tau)?;
    let gen_at = |t: f64| generation.rate(peak_power * envelope.shape(t));
    match envelope.period() {
        None => state.density = state.steady_state(gen_at(0.0)),
        Some(period) => {
            let warm = (period / dt).ceil() as usize;
            let t0 = start - warm as f64 * dt;
            for i in 0..warm {
                state.step(gen_at(t0 + (i as f64 + 0.5) * dt), dt);
            }
        }
    }
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        values.push(state.density.max(0.0));
        state.step(gen_at(start + (i as f64 + 0.5) * dt), dt);
    }
    Ok(Trace { start, step: dt, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_sim::rise_fall_time;

    fn pulse(rise_fall: f64) -> PumpEnvelope {
        PumpEnvelope::SquarePulse { duration: 50e-9, rep_rate: 2e6, rise_fall }
    }

    #[test]
    fn zero_power_zero_density() {
        let t =
            carrier_density_trace(&pulse(450e-12), 0.0, 1e-9, CarrierGeneration::default(), 0.0, 1e-11, 1000).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cw_fixed_point() {
        let g = CarrierGeneration { linear: 2.0, quadratic: 3.0 };
        let t = carrier_density_trace(&PumpEnvelope::Cw, 0.5, 1e-9, g, 0.0, 1e-11, 10).unwrap();
        let expected = 1e-9 * (2.0 * 0.5 + 3.0 * 0.25);
        assert!(t.values.iter().all(|&v| (v - expected).abs() < 1e-12 * expected));
    }

    #[test]
    fn square_pulse_rise_is_ln9_tau() {
        let t =
            carrier_density_trace(&pulse(0.0), 1.0, 1e-9, CarrierGeneration::default(), -5e-9, 5e-12, 14000).unwrap();
        let e = rise_fall_time(&t, 0.1, 0.9).unwrap();
        assert!((e.rise / (9f64.ln() * 1e-9) - 1.0).abs() < 0.01, "{}", e.rise);
    }

    #[test]
    fn bad_lifetime() {
        assert!(CarrierState::new(0.0).is_err());
        assert!(carrier_density_trace(&pulse(0.0), 1.0, -1.0, CarrierGeneration::default(), 0.0, 1e-11, 5).is_err());
    }
}
