use super::stream::EventStream;
use super::SimError;
use crate::instrument::Channel;
use serde::Serialize;
use std::io::Write;

/// Histogram of delays t_AS − t_S. Bin k is centred on k·bin_width for
/// k = −half..=half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceHistogram {
    /// s
    pub bin_width: f64,
    /// s, full width (2·half + 1)·bin_width
    pub span: f64,
    pub counts: Vec<u64>,
    /// (Stokes, anti-Stokes) events that went into the histogram
    pub total_singles: (u64, u64),
    /// s, acquisition time of the contributing streams
    pub duration: f64,
}

impl CoincidenceHistogram {
    /// Empty histogram covering ±span/2; the bin count is made odd so that
    /// zero delay sits in the middle of a bin.
    pub fn empty(bin_width: f64, span: f64) -> Result<Self, SimError> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(SimError::Config(format!("bin width must be > 0, got {bin_width}")));
        }
        if !(span >= bin_width && span.is_finite()) {
            return Err(SimError::Config(format!("span {span} must be at least one bin")));
        }
        let half = (span / (2.0 * bin_width) + 1e-9).floor() as usize;
        let n = 2 * half + 1;
        Ok(Self { bin_width, span: n as f64 * bin_width, counts: vec![0; n], total_singles: (0, 0), duration: 0.0 })
    }

    pub fn half(&self) -> usize {
        self.counts.len() / 2
    }

    /// Bin centres in s.
    pub fn delays(&self) -> Vec<f64> {
        let h = self.half() as f64;
        (0..self.counts.len()).map(|i| (i as f64 - h) * self.bin_width).collect()
    }

    pub fn peak(&self) -> u64 {
        self.counts[self.half()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn bin_of(&self, delay: f64) -> Option<usize> {
        let k = (delay / self.bin_width).round();
        let h = self.half() as f64;
        (k.abs() <= h).then_some((k + h) as usize)
    }

    /// Adds every (Stokes, anti-Stokes) pair of `stream` whose delay falls in range.
    pub fn accumulate(&mut self, stream: &EventStream) {
        let s = stream.times(Channel::Stokes);
        let a = stream.times(Channel::AntiStokes);
        let reach = (self.half() as f64 + 0.5) * self.bin_width;
        let mut lo = 0;
        for &ts in &s {
            while lo < a.len() && a[lo] < ts - reach {
                lo += 1;
            }
            for &ta in &a[lo..] {
                if ta > ts + reach {
                    break;
                }
                if let Some(i) = self.bin_of(ta - ts) {
                    self.counts[i] += 1;
                }
            }
        }
        self.total_singles.0 += s.len() as u64;
        self.total_singles.1 += a.len() as u64;
        self.duration += stream.duration;
    }

    /// Bin-wise sum; associative and commutative.
    pub fn merge(&self, other: &Self) -> Result<Self, SimError> {
        if self.bin_width != other.bin_width || self.counts.len() != other.counts.len() {
            return Err(SimError::IncompatibleHistograms);
        }
        Ok(Self {
            bin_width: self.bin_width,
            span: self.span,
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            total_singles: (self.total_singles.0 + other.total_singles.0, self.total_singles.1 + other.total_singles.1),
            duration: self.duration + other.duration,
        })
    }

    /// `delay_s,counts`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["delay_s", "counts"])?;
        for (d, c) in self.delays().into_iter().zip(&self.counts) {
            w.write_record([format!("{d:.6e}"), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn coincidence_histogram(
    stream: &EventStream,
    bin_width: f64,
    span: f64,
) -> Result<CoincidenceHistogram, SimError> {
    let mut h = CoincidenceHistogram::empty(bin_width, span)?;
    h.accumulate(stream);
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrEstimate {
    pub peak: u64,
    pub mean_off_peak: f64,
    pub off_peak_bins: usize,
    /// (peak − mean_off)/mean_off
    pub snr: f64,
    pub snr_sigma: f64,
    /// peak/mean_off
    pub car: f64,
    pub car_sigma: f64,
}

/// Default exclusion of ±2 bins around zero and at least 10 off-peak bins.
pub fn snr_estimate(hist: &CoincidenceHistogram) -> Result<SnrEstimate, SimError> {
    snr_estimate_with(hist, 2, 10)
}

/// Off-peak bins are those with |k| > `exclusion`.
pub fn snr_estimate_with(
    hist: &CoincidenceHistogram,
    exclusion: usize,
    min_off_bins: usize,
) -> Result<SnrEstimate, SimError> {
    let h = hist.half();
    let off: Vec<u64> =
        hist.counts.iter().enumerate().filter(|&(i, _)| i.abs_diff(h) > exclusion).map(|(_, &c)| c).collect();
    if off.len() < min_off_bins.max(1) {
        return Err(SimError::EmptyOffPeak(format!("{} off-peak bins, need {}", off.len(), min_off_bins)));
    }
    let n_off = off.len() as f64;
    let mean = off.iter().sum::<u64>() as f64 / n_off;
    if mean <= 0.0 {
        return Err(SimError::EmptyOffPeak("no accidental counts".into()));
    }
    let peak = hist.peak();
    let p = peak as f64;
    let car = p / mean;
    // Poisson errors on the peak and on the off-peak mean
    let rel = (1.0 / p.max(1.0) + 1.0 / (mean * n_off)).sqrt();
    Ok(SnrEstimate {
        peak,
        mean_off_peak: mean,
        off_peak_bins: off.len(),
        snr: car - 1.0,
        snr_sigma: car * rel,
        car,
        car_sigma: car * rel,
    })
}
