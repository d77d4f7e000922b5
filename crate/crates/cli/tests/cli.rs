use std::path::Path;
use std::process::{Command, Output};

const MEDIUM: [&str; 6] = ["--peak", "0.615", "--background", "0.10", "--fwhm-khz", "350"];

fn slowlight(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slowlight")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = slowlight(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn value(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('=')?.trim().parse().ok())
        .unwrap_or_else(|| panic!("{key} missing from {stdout}"))
}

fn trace(path: &Path) -> Vec<(f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

#[test]
fn calibrate_prints_fitted_medium() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["calibrate", "--peak", "0.615", "--background", "0.10", "--fwhm-khz", "350"]);
    assert!((value(&out, "gamma_khz") - 268.2).abs() < 0.5);
    assert!((value(&out, "z") - 0.9083).abs() < 1e-4);
}

#[test]
fn calibrate_from_table_matches_direct_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let direct = ok(d, &["calibrate", "--peak", "0.615", "--background", "0.10", "--fwhm-khz", "350"]);
    let (gamma, z) = (value(&direct, "gamma_khz") * 1e3, value(&direct, "z"));
    // dense table of the fitted curve, out to where it has settled on the background
    let mut text = String::from("detuning_hz,transmission\n");
    for k in -40_000..=40_000 {
        let delta = k as f64 * 250.0;
        let t = 0.615 * (-2.0 * delta * delta * z / (delta * delta + gamma * gamma)).exp();
        text.push_str(&format!("{delta:e},{t:e}\n"));
    }
    std::fs::write(d.join("window.csv"), text).unwrap();
    let from_table = ok(d, &["calibrate", "--transmission", "window.csv"]);
    // the table ends ~37 Γ out, where the curve is still 0.15% above its asymptote
    assert!((value(&from_table, "gamma_khz") - value(&direct, "gamma_khz")).abs() < 2.0);
    assert!((value(&from_table, "z") - z).abs() < 5e-3);
}

#[test]
fn amg_synth_has_zeros_half_a_period_from_center() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["synth", "--kind", "amg", "--t0-us", "6.5", "--depth", "1", "--mod-khz", "700", "--out", "amg.csv"],
    );
    let samples = trace(&dir.path().join("amg.csv"));
    let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let dt = samples[1].0 - samples[0].0;
    let zero = 1.0 / (2.0 * 700e3);
    for side in [-1.0, 1.0] {
        let target = side * zero;
        let (t, v) = samples
            .iter()
            .filter(|s| (s.0 - target).abs() <= 2.0 * dt)
            .cloned()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!((t - target).abs() <= dt, "minimum at {t:e}, expected near {target:e}");
        assert!(v < 1e-4 * peak);
    }
}

#[test]
fn metrics_of_identical_traces_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "gaussian", "--t0-us", "6.5", "--out", "ref.csv"]);
    std::fs::copy(d.join("ref.csv"), d.join("out.csv")).unwrap();
    let out = ok(d, &["metrics", "--out", "out.csv", "--in", "ref.csv"]);
    assert_eq!(value(&out, "delay_us"), 0.0);
    assert_eq!(value(&out, "loss"), 0.0);
    assert!(value(&out, "nrmse") < 1e-12);
    assert!((value(&out, "fwhm_us") - 13.0).abs() < 0.05);
}

#[test]
fn chained_commands_reproduce_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "amg", "--t0-us", "6.5", "--depth", "1", "--mod-khz", "700", "--out", "in.csv"]);
    let mut args = vec!["propagate", "--in", "in.csv", "--out", "out.csv", "--spectrum-out", "out_spec.csv"];
    args.extend(MEDIUM);
    ok(d, &args);
    let mut args = vec!["compensate", "--in", "out_spec.csv", "--out", "rec.csv", "--gain-out", "gain.csv"];
    args.extend(MEDIUM);
    ok(d, &args);

    let out = ok(d, &["metrics", "--out", "out.csv", "--in", "in.csv"]);
    let rec = ok(d, &["metrics", "--out", "rec.csv", "--in", "in.csv"]);
    assert!(value(&rec, "delay_us") < value(&out, "delay_us"));
    assert!(value(&rec, "loss").abs() < 1e-9);

    let comp =
        ok(d, &["decompose", "--out", "out_spec.csv", "--in", "in.csv", "--mod-khz", "700", "--out-dir", "parts"]);
    assert!(value(&comp, "carrier_delay_us") > 0.0);
    assert!(value(&comp, "left_delay_us") < 0.0);
    assert!(value(&comp, "right_delay_us") < 0.0);
    assert!(d.join("parts/component_left.csv").exists());
}

#[test]
fn run_bundled_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["run", "--bundled", "fig2a", "--bundled", "fig4", "--out-dir", "runs"]);
    let fig2a = std::fs::read_to_string(dir.path().join("runs/fig2a/summary.toml")).unwrap();
    assert!(fig2a.contains("delay_us"));
    assert!(out.contains("[fig4]"));
    let delay = value(&out, "output_delay_us");
    assert!((delay - 0.539).abs() < 0.02 * 0.539);
}

#[test]
fn run_scenario_file_with_measured_transmission() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut table = String::from("detuning_hz,transmission\n");
    for k in -400..=400 {
        let delta = k as f64 * 5e3;
        let gamma: f64 = 268e3;
        let t = 0.615 * (-2.0 * 0.908 * delta * delta / (delta * delta + gamma * gamma)).exp();
        table.push_str(&format!("{delta:e},{t:e}\n"));
    }
    std::fs::write(d.join("window.csv"), table).unwrap();
    let scenario = r#"
[scenario]
name = "measured"

[pulse]
kind = "amg"
t0_us = 6.5
depth = 1.0
mod_khz = 700.0

[channel]
model = "hybrid"
peak = 0.615
background = 0.10
fwhm_khz = 350.0
transmission_file = "window.csv"

[compensation]
floor = 1e-3
source = "measured"

[output]
dir = "measured_out"
"#;
    std::fs::write(d.join("measured.toml"), scenario).unwrap();
    ok(d, &["run", "measured.toml"]);
    assert!(d.join("measured_out/gain_spectrum.csv").exists());
}

#[test]
fn errors_exit_with_class_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let bad = slowlight(d, &["synth", "--kind", "amg", "--t0-us", "6.5", "--depth", "2", "--mod-khz", "700"]);
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8(bad.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error code=validation exit=2: depth:"), "{stderr}");

    let toml = "[pulse]\nkind = \"amg\"\nt0_us = 6.5\ndepth = 2.0\nmod_khz = 700.0\n\n[channel]\nmodel = \"analytic\"\ngamma_khz = 268.0\nz = 0.9\n\n[compensation]\nfloor = 1e-3\nsource = \"model\"\n";
    std::fs::write(d.join("bad.toml"), toml).unwrap();
    let bad = slowlight(d, &["run", "bad.toml"]);
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8(bad.stderr).unwrap();
    assert!(stderr.contains("bad.toml:4: pulse.depth:"), "{stderr}");

    let short = slowlight(d, &["synth", "--kind", "gaussian", "--t0-us", "6.5", "--window-us", "30", "--n", "1024"]);
    assert_eq!(short.status.code(), Some(3));

    let missing = slowlight(d, &["metrics", "--out", "nope.csv", "--in", "nope.csv"]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8(missing.stderr).unwrap().starts_with("error code=io exit=4:"));
}

#[test]
fn strict_propagation_refuses_wraparound() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // window just wide enough for the pulse, medium delay far larger than it
    ok(d, &["synth", "--kind", "gaussian", "--t0-us", "6.5", "--window-us", "60", "--n", "1024", "--out", "in.csv"]);
    let args = ["propagate", "--in", "in.csv", "--gamma-khz", "1", "--z", "0.2", "--out", "out.csv", "--strict"];
    let out = slowlight(d, &args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    ok(d, &args[..args.len() - 1]);
}
