use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Union of acquisition windows `[k·period, k·period + width)` clipped to
/// `[0, duration)`. Events are generated on the concatenated live-time axis
/// and mapped back to wall time, so gated runs only pay for the open gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveTimeline {
    period: f64,
    width: f64,
    duration: f64,
}

impl LiveTimeline {
    pub fn continuous(duration: f64) -> Self {
        Self { period: duration, width: duration, duration }
    }

    pub fn gated(period: f64, width: f64, duration: f64) -> Self {
        if width >= period {
            Self::continuous(duration)
        } else {
            Self { period, width, duration }
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Total open time.
    pub fn live_time(&self) -> f64 {
        let full = (self.duration / self.period).floor();
        let rest = self.duration - full * self.period;
        full * self.width + rest.min(self.width)
    }

    pub fn to_wall_time(&self, live: f64) -> f64 {
        if self.width == self.period {
            return live;
        }
        let k = (live / self.width).floor();
        k * self.period + (live - k * self.width)
    }
}

/// Homogeneous Poisson arrivals at `rate` over the timeline's live time,
/// returned in wall time, sorted.
pub fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, timeline: &LiveTimeline, rng: &mut R) -> Vec<f64> {
    let live = timeline.live_time();
    if !(rate > 0.0) || live <= 0.0 {
        return Vec::new();
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut out = Vec::with_capacity((rate * live * 1.05 + 16.0) as usize);
    let mut u = 0.0;
    loop {
        u += gap.sample(rng);
        if u >= live {
            break;
        }
        out.push(timeline.to_wall_time(u));
    }
    out
}

/// Keeps each event independently with probability `p`.
pub fn thin<R: Rng + ?Sized>(times: &[f64], p: f64, rng: &mut R) -> Vec<f64> {
    times.iter().copied().filter(|_| rng.random::<f64>() < p).collect()
}
