use super::{to_json, CliError};
use crate::config::RunConfig;
use crate::output::RunOutput;
use serde_json::json;
use siscatter::event_sim::{coincidence_histogram, snr_estimate, EventModel, Origin};
use siscatter::instrument::detected_rate;
use siscatter::Channel;

pub fn montecarlo(config: &RunConfig, out: &mut RunOutput) -> Result<serde_json::Value, CliError> {
    let r = config.resolve()?;
    let s = &config.simulation;
    let model = EventModel::new(&r.wg, &r.pump, &r.bands, &r.instrument, r.raman.as_ref())?;
    let batch = s.duration_s / s.batches as f64;
    let stream = model.simulate_batches(batch, s.batches, s.seed)?;
    let hist = coincidence_histogram(&stream, s.bin_width_ns * 1e-9, s.span_ns * 1e-9)?;

    if s.write_events {
        out.write_with("events.csv", |buf| stream.write_csv(buf))?;
    }
    out.write_with("histogram.csv", |buf| hist.write_csv(buf))?;

    let mut channels = serde_json::Map::new();
    for ch in Channel::BOTH {
        let det = r.instrument.detector(ch);
        let mut by_origin = serde_json::Map::new();
        for o in Origin::ALL {
            by_origin.insert(o.label().into(), json!(stream.count(ch, Some(o))));
        }
        let counts = stream.count(ch, None);
        channels.insert(
            ch.label().into(),
            json!({
                "counts": counts,
                "counts_by_origin": by_origin,
                "simulated_rate": counts as f64 / stream.duration,
                "analytic_rate": detected_rate(model.mean_incident(ch), det),
                "dark_rate": det.dark_rate,
            }),
        );
    }
    let snr = match snr_estimate(&hist) {
        Ok(e) => to_json(e),
        Err(e) => json!({"error": e.to_string()}),
    };
    Ok(json!({
        "duration_s": stream.duration,
        "batches": s.batches,
        "events": stream.len(),
        "channels": channels,
        "histogram": {
            "bin_width_s": hist.bin_width,
            "span_s": hist.span,
            "bins": hist.counts.len(),
            "peak": hist.peak(),
            "total": hist.total(),
        },
        "snr": snr,
    }))
}
