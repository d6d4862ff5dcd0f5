use super::{to_json, CliError};
use crate::config::RunConfig;
use crate::output::RunOutput;
use serde::Serialize;
use serde_json::json;
use siscatter::event_sim::{
    compare_normalized, rise_fall_time, time_resolved_flux, BinnedTrace, TraceChannel, TraceRequest, TraceSource,
};
use siscatter::units::{MW, NM};
use siscatter::PumpConfig;

fn edges(trace: &BinnedTrace) -> serde_json::Value {
    match rise_fall_time(&trace.per_pulse(), 0.1, 0.9) {
        Ok(e) => json!({"rise_s": e.rise, "fall_s": e.fall, "plateau_per_pulse": e.plateau}),
        Err(e) => json!({"error": e.to_string()}),
    }
}

pub fn timetrace(config: &RunConfig, out: &mut RunOutput) -> Result<serde_json::Value, CliError> {
    let t = &config.timetrace;
    let envelope = config.timetrace_envelope();
    let mut channels = vec![TraceChannel { source: TraceSource::Thermal, coefficient: t.thermal_coefficient }];
    if t.carrier_coefficient > 0.0 {
        channels.push(TraceChannel {
            source: TraceSource::Carrier { tau: t.carrier_lifetime_ns * 1e-9, generation: config.carrier_generation() },
            coefficient: t.carrier_coefficient,
        });
    }
    let mut runs = Vec::new();
    let mut per_power = Vec::new();
    for (i, &p_mw) in t.powers_mw.iter().enumerate() {
        let request = TraceRequest {
            pump: PumpConfig { carrier_wavelength: config.pump.wavelength_nm * NM, power: p_mw * MW, envelope },
            channels: channels.clone(),
            bin_width: t.bin_width_ps * 1e-12,
            duration: t.duration_s,
            jitter_sigma: t.jitter_ps * 1e-12,
            window_start: t.window_start_ns * 1e-9,
        };
        let traces = time_resolved_flux(&request, config.simulation.seed.wrapping_add(i as u64))?;
        let file = format!("trace_{i}.csv");
        write_traces(out, &file, &traces)?;
        let mut summary = serde_json::Map::new();
        for tr in &traces {
            summary.insert(tr.source.label().into(), edges(tr));
        }
        per_power.push(json!({
            "power_mw": p_mw,
            "file": file,
            "pulses": traces[0].pulses,
            "edges_10_90": summary,
        }));
        runs.push(traces);
    }
    // thermal traces normalised over the pulse should coincide at every power
    let from = -1e-9;
    let to = envelope.period().map_or(0.0, |_| pulse_length(config) + 2e-9);
    let mut comparisons = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let c = compare_normalized(&runs[i][0], &runs[j][0], from, to)?;
            comparisons.push(json!({
                "powers_mw": [t.powers_mw[i], t.powers_mw[j]],
                "bins": c.bins,
                "fraction_beyond_3_sigma": c.fraction_above_3_sigma(),
                "max_abs_z": c.max_abs_z,
            }));
        }
    }
    Ok(json!({
        "units": {"time": "s", "counts": "per bin, summed over pulses"},
        "traces": per_power,
        "thermal_comparisons": to_json(comparisons),
        "comparison_window_s": [from, to],
    }))
}

fn pulse_length(config: &RunConfig) -> f64 {
    match config.timetrace.envelope {
        crate::config::EnvelopeSection::Pulsed { duration_ns, .. } => duration_ns * 1e-9,
        crate::config::EnvelopeSection::Cw => 0.0,
    }
}

#[derive(Serialize)]
struct TraceRow {
    time_ns: f64,
    source: &'static str,
    counts: u64,
    expected: f64,
}

fn write_traces(out: &mut RunOutput, name: &str, traces: &[BinnedTrace]) -> Result<(), CliError> {
    let rows = traces.iter().flat_map(|tr| {
        tr.times().into_iter().zip(tr.counts.iter().zip(&tr.expected)).map(move |(time, (&counts, &expected))| {
            TraceRow { time_ns: time * 1e9, source: tr.source.label(), counts, expected }
        })
    });
    out.write_csv(name, rows)
}
