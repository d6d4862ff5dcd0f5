use serde_json::Value;
use siscatter::event_sim::EventStream;
use siscatter::fitting::Dataset;
use siscatter_cli::{run, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use std::path::{Path, PathBuf};

const QUICK_MC: &str = "simulation.duration_s=0.5";

fn siscatter(cmd: &str, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["siscatter".to_string(), cmd.to_string(), "--out".into(), out.display().to_string()];
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn col(headers: &csv::StringRecord, name: &str) -> usize {
    headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

#[test]
fn every_command_writes_its_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str], &[&str]); 5] = [
        ("spectrum", &[], &["spectrum_stokes.csv", "spectrum_anti_stokes.csv"]),
        ("power-sweep", &[], &["power_sweep.csv", "power_emitted_stokes.csv", "power_detected_anti_stokes.csv"]),
        ("temp-sweep", &[], &["temp_sweep.csv", "temp_stokes.csv"]),
        ("timetrace", &["--set", "timetrace.duration_s=0.2"], &["trace_0.csv", "trace_1.csv", "trace_2.csv"]),
        ("montecarlo", &["--set", QUICK_MC], &["events.csv", "histogram.csv"]),
    ];
    for (cmd, extra, files) in cases {
        let dir = tmp.path().join(cmd);
        assert_eq!(siscatter(cmd, &dir, extra), EXIT_OK, "{cmd}");
        let rep = report(&dir);
        assert_eq!(rep["command"], cmd);
        assert_eq!(rep["schema"], "siscatter-report/1");
        let listed: Vec<&str> = rep["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        for f in files.iter().chain(&["config.resolved"]) {
            assert!(dir.join(f).is_file(), "{cmd}: missing {f}");
            assert!(listed.contains(f), "{cmd}: {f} not listed");
        }
        // no temporaries left behind
        for e in std::fs::read_dir(&dir).unwrap() {
            assert!(!e.unwrap().file_name().to_string_lossy().ends_with(".tmp"));
        }
    }
}

#[test]
fn reruns_are_byte_identical_apart_from_wall_clock() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["spectrum", "montecarlo"] {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        assert_eq!(siscatter(cmd, &a, &["--set", QUICK_MC]), EXIT_OK);
        assert_eq!(siscatter(cmd, &b, &["--set", QUICK_MC]), EXIT_OK);
        let (mut ra, mut rb) = (report(&a), report(&b));
        ra.as_object_mut().unwrap().remove("wall_clock");
        rb.as_object_mut().unwrap().remove("wall_clock");
        assert_eq!(ra, rb, "{cmd}");
        for f in ra["files"].as_array().unwrap() {
            let f = f.as_str().unwrap();
            if f == "report.json" {
                continue;
            }
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{cmd}/{f}");
        }
    }
}

#[test]
fn seed_flag_changes_and_pins_the_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let events = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        assert_eq!(siscatter("montecarlo", &dir, &["--seed", seed, "--set", QUICK_MC]), EXIT_OK);
        assert_eq!(report(&dir)["seed"], seed.parse::<u64>().unwrap());
        std::fs::read(dir.join("events.csv")).unwrap()
    };
    let a = events("a", "11");
    assert_eq!(a, events("b", "11"));
    assert_ne!(a, events("c", "12"));
}

#[test]
fn config_errors_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = [
        vec!["--set", "pump.powr_mw=1"],
        vec!["--set", "pump.power_mw=-1"],
        vec!["--set", "bands.stokes_thz=[-2.5, 0.3]"],
        vec!["--set", "detectors.stokes.efficiency=1.5"],
        vec!["--config", "/nonexistent/run.toml"],
    ];
    for (i, extra) in bad.iter().enumerate() {
        let dir = tmp.path().join(format!("bad{i}"));
        assert_eq!(siscatter("spectrum", &dir, extra), EXIT_CONFIG, "{extra:?}");
        assert!(!dir.join("report.json").exists());
    }
    // unknown subcommand and a fit without data are argument errors too
    assert_eq!(run(["siscatter", "frobnicate"]), EXIT_CONFIG);
    assert_eq!(siscatter("fit", &tmp.path().join("nofit"), &["--model", "power"]), EXIT_CONFIG);
}

#[test]
fn straddling_band_is_accepted_when_allowed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("straddle");
    let args = ["--set", "bands.stokes_thz=[-2.5, 0.3]", "--set", "bands.allow_zero_crossing=true"];
    assert_eq!(siscatter("spectrum", &dir, &args), EXIT_OK);
    assert_eq!(report(&dir)["results"]["channels"]["stokes"]["band_thz"][1], 0.3);
}

#[test]
fn unidentifiable_fit_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("flat.csv");
    std::fs::write(&data, "x,y,sigma\n1,2,0.1\n1,3,0.1\n1,4,0.1\n1,5,0.1\n").unwrap();
    let args = ["--data", data.to_str().unwrap(), "--model", "linear"];
    assert_eq!(siscatter("fit", &tmp.path().join("fit"), &args), EXIT_NUMERICAL);
}

#[test]
fn spectrum_has_thermal_asymmetry_and_consistent_totals() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let grid = "sweep={ variable = \"detuning\", grid = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] }";
    assert_eq!(siscatter("spectrum", &dir, &["--set", grid]), EXIT_OK);
    let read = |ch: &str| {
        let mut r = csv::Reader::from_path(dir.join(format!("spectrum_{ch}.csv"))).unwrap();
        let h = r.headers().unwrap().clone();
        (h, r.records().map(Result::unwrap).collect::<Vec<_>>())
    };
    let (h, s) = read("stokes");
    let (_, a) = read("anti_stokes");
    assert_eq!((s.len(), a.len()), (3, 3));
    let (d, th, pa, ra, tot) =
        (col(&h, "detuning_thz"), col(&h, "thermal"), col(&h, "pair"), col(&h, "raman"), col(&h, "total"));
    for r in &s {
        let sum = num(r, th) + num(r, pa) + num(r, ra);
        assert!((num(r, tot) - sum).abs() <= 1e-12 * sum.abs().max(1e-300));
    }
    // each file keeps its own side of the pump
    let at = |rs: &[csv::StringRecord], nu: f64| {
        rs.iter().find(|r| (num(r, d) - nu).abs() < 1e-9).map(|r| num(r, th)).unwrap()
    };
    for nu in [0.5, 1.0, 2.0] {
        assert!(at(&s, -nu) > at(&a, nu), "{nu} THz");
    }
    let rep = report(&dir);
    for ch in ["stokes", "anti_stokes"] {
        let c = &rep["results"]["channels"][ch];
        assert!(c["pump_suppression_db"].as_f64().unwrap() >= 150.0);
        let e = &c["emitted_flux"];
        let sum = e["thermal"].as_f64().unwrap() + e["pair"].as_f64().unwrap() + e["raman"].as_f64().unwrap();
        assert!((e["total"].as_f64().unwrap() / sum - 1.0).abs() < 1e-12);
    }
    let st = rep["results"]["channels"]["stokes"]["emitted_flux"]["thermal"].as_f64().unwrap();
    let an = rep["results"]["channels"]["anti_stokes"]["emitted_flux"]["thermal"].as_f64().unwrap();
    assert!(st > an);
}

#[test]
fn power_sweep_recovers_model_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("p");
    let grid = "sweep={ variable = \"power\", grid = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5] }";
    assert_eq!(siscatter("power-sweep", &dir, &["--set", grid]), EXIT_OK);
    let rep = report(&dir);
    for ch in ["stokes", "anti_stokes"] {
        let c = &rep["results"]["channels"][ch];
        let p = &c["emitted_fit"]["params"];
        let m = &c["emitted_model"];
        for (i, k) in ["a", "b"].iter().enumerate() {
            let rel = p[i].as_f64().unwrap() / m[k].as_f64().unwrap() - 1.0;
            assert!(rel.abs() < 0.01, "{ch} {k}: {rel}");
        }
        let kappa = c["kappa"]["per_cm_per_thz"].as_f64().unwrap();
        assert!((kappa / 3.5e-10 - 1.0).abs() < 0.01, "{ch}: {kappa}");
    }
    let mut r = csv::Reader::from_path(dir.join("power_sweep.csv")).unwrap();
    let h = r.headers().unwrap().clone();
    let all: Vec<_> = r.records().map(Result::unwrap).collect();
    let (p, ch, tot, lin) =
        (col(&h, "power_mw"), col(&h, "channel"), col(&h, "total_flux"), col(&h, "linear_fraction"));
    let stokes: Vec<_> = all.iter().filter(|r| &r[ch] == "stokes").collect();
    let at = |mw: f64| stokes.iter().find(|r| num(r, p) == mw).unwrap();
    assert_eq!(num(at(0.0), tot), 0.0);
    assert!(num(at(0.25), lin) > num(at(2.5), lin));
}

#[test]
fn power_sweep_output_feeds_the_fit_command() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = tmp.path().join("p");
    assert_eq!(siscatter("power-sweep", &sweep, &[]), EXIT_OK);
    let data = sweep.join("power_detected_stokes.csv");
    let ds = Dataset::from_csv_path(&data).unwrap();
    assert_eq!(ds.len(), 10);

    let fit = tmp.path().join("f");
    assert_eq!(siscatter("fit", &fit, &["--data", data.to_str().unwrap(), "--model", "power"]), EXIT_OK);
    let got = &report(&fit)["results"]["result"]["params"];
    let want = &report(&sweep)["results"]["channels"]["stokes"]["detected_fit"]["params"];
    for i in 0..2 {
        assert!((got[i].as_f64().unwrap() / want[i].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    let res = rows(&fit.join("fit_residuals.csv"));
    assert_eq!(res.len(), 10);
}

#[test]
fn events_file_reads_back() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("mc");
    assert_eq!(siscatter("montecarlo", &dir, &["--set", QUICK_MC]), EXIT_OK);
    let rep = report(&dir);
    let stream = EventStream::read_csv(std::fs::File::open(dir.join("events.csv")).unwrap(), 0.5).unwrap();
    assert_eq!(stream.len() as u64, rep["results"]["events"].as_u64().unwrap());
    let hist = rows(&dir.join("histogram.csv"));
    assert_eq!(hist.len() as u64, rep["results"]["histogram"]["bins"].as_u64().unwrap());
}

#[test]
fn example_config_with_raman_table_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = example("fiber_raman.toml");
    let dir = tmp.path().join("ex");
    assert_eq!(siscatter("power-sweep", &dir, &["--config", config.to_str().unwrap()]), EXIT_OK);
    let rep = report(&dir);
    assert_eq!(rep["config"]["waveguide"]["temperature_k"], 350.0);
    let c = &rep["results"]["channels"]["stokes"];
    let kappa = c["kappa"]["per_cm_per_thz"].as_f64().unwrap();
    assert!((kappa / 3.5e-10 - 1.0).abs() < 0.02, "{kappa}");
    let rows = rows(&dir.join("power_emitted_stokes.csv"));
    assert_eq!(rows.len(), 6);
}
