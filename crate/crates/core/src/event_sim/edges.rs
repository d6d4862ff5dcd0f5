use serde::Serialize;
use thiserror::Error;

/// Uniformly sampled signal; `values[i]` belongs to time `start + i·step`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.time(i)).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EdgeError {
    #[error("no plateau detected")]
    NoPlateau,
    #[error("no {0} edge crossing both levels")]
    NoEdge(&'static str),
    #[error("levels must satisfy 0 < low < high < 1")]
    BadLevels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeTimes {
    /// s
    pub rise: f64,
    /// s; absent if the trace ends before the signal falls
    pub fall: Option<f64>,
    /// level the fractions refer to
    pub plateau: f64,
}

fn crossing(trace: &Trace, i: usize, level: f64) -> f64 {
    // level lies between values[i] and values[i + 1]
    let (a, b) = (trace.values[i], trace.values[i + 1]);
    let f = if b != a { (level - a) / (b - a) } else { 0.5 };
    trace.time(i) + f * trace.step
}

/// 10–90 % style edge times relative to a zero baseline and the plateau
/// (median of samples above half the maximum), by linear interpolation
/// between the bracketing samples.
pub fn rise_fall_time(trace: &Trace, low: f64, high: f64) -> Result<EdgeTimes, EdgeError> {
    if !(0.0 < low && low < high && high < 1.0) {
        return Err(EdgeError::BadLevels);
    }
    let max = trace.max();
    if !(max > 0.0 && max.is_finite()) {
        return Err(EdgeError::NoPlateau);
    }
    let mut top: Vec<f64> = trace.values.iter().copied().filter(|&v| v >= 0.5 * max).collect();
    if top.len() < 3 {
        return Err(EdgeError::NoPlateau);
    }
    top.sort_by(f64::total_cmp);
    let plateau = top[top.len() / 2];
    let (lo, hi) = (low * plateau, high * plateau);
    let v = &trace.values;

    let first_high = v.iter().position(|&x| x >= hi).ok_or(EdgeError::NoEdge("rising"))?;
    let below = v[..first_high].iter().rposition(|&x| x < lo).ok_or(EdgeError::NoEdge("rising"))?;
    let t_lo = (below..first_high).find(|&i| v[i] < lo && v[i + 1] >= lo).map(|i| crossing(trace, i, lo));
    let t_hi = crossing(trace, first_high - 1, hi);
    let rise = t_hi - t_lo.ok_or(EdgeError::NoEdge("rising"))?;

    let last_high = v.iter().rposition(|&x| x >= hi).expect("plateau above high level");
    let fall = v[last_high..].iter().position(|&x| x < lo).map(|off| {
        let after = last_high + off;
        let t_hi = crossing(trace, last_high, hi);
        let t_lo = (last_high..after).rev().find(|&i| v[i] >= lo && v[i + 1] < lo).map(|i| crossing(trace, i, lo));
        t_lo.unwrap_or(trace.time(after)) - t_hi
    });
    Ok(EdgeTimes { rise, fall, plateau })
}
