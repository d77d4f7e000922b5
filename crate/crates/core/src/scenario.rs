//! Scenario files and the end-to-end runner.
//!
//! A scenario is a TOML document with `[scenario]`, `[pulse]`, `[channel]`,
//! `[grid]`, `[compensation]` and `[output]` sections. Physical quantities
//! carry their unit in the key name (`t0_us`, `mod_khz`, `fwhm_khz`, ...).
//! Relative paths resolve against the directory holding the scenario file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    compensate_intensity_spectrum, decompose_components, export_gain_spectrum, gain_spectrum_csv, measure_metrics,
    recover_spectrum, transmission_profile, CompensationConfig, PulseMetrics, TransmissionSource,
};
use crate::csvio;
use crate::error::{Error, Result};
use crate::medium::{calibrate_from_transmission, EitMedium, MeasuredTransmission};
use crate::propagation::{edge_energy_fraction, propagate_spectrum, AmplitudeSource, Channel};
use crate::signal::{intensity_of, PulseSpec, SamplingGrid};
use crate::spectral::{dft, idft, intensity_spectrum};

const US: f64 = 1e-6;
const KHZ: f64 = 1e3;

/// Names of the scenarios shipped with the crate.
pub const BUNDLED: [&str; 5] = ["fig2a", "fig2b", "fig3a", "fig3b", "fig4"];

/// Source text of a bundled scenario.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2a" => include_str!("../scenarios/fig2a.toml"),
        "fig2b" => include_str!("../scenarios/fig2b.toml"),
        "fig3a" => include_str!("../scenarios/fig3a.toml"),
        "fig3b" => include_str!("../scenarios/fig3b.toml"),
        "fig4" => include_str!("../scenarios/fig4.toml"),
        _ => return None,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    scenario: RawMeta,
    pulse: RawPulse,
    channel: RawChannel,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    compensation: RawCompensation,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    name: Option<String>,
    focus: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    kind: String,
    t0_us: Option<f64>,
    fwhm_us: Option<f64>,
    depth: Option<f64>,
    mod_khz: Option<f64>,
    #[serde(default)]
    center_us: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    #[serde(default = "default_model")]
    model: String,
    peak: Option<f64>,
    background: Option<f64>,
    fwhm_khz: Option<f64>,
    gamma_khz: Option<f64>,
    z: Option<f64>,
    scale: Option<f64>,
    transmission_file: Option<PathBuf>,
    extrapolation: Option<f64>,
}

fn default_model() -> String {
    "analytic".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    window_us: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompensation {
    #[serde(default = "default_floor")]
    floor: f64,
    #[serde(default = "default_source")]
    source: String,
}

impl Default for RawCompensation {
    fn default() -> Self {
        Self { floor: default_floor(), source: default_source() }
    }
}

fn default_floor() -> f64 {
    crate::analysis::DEFAULT_FLOOR
}

fn default_source() -> String {
    "model".into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub focus: Option<String>,
    pub pulse: PulseSpec,
    pub grid: SamplingGrid,
    pub channel: Channel,
    pub compensation: CompensationConfig,
    pub output_dir: Option<PathBuf>,
}

/// 1-based line of `key` inside `[section]`, or of the section header itself.
fn locate_key(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut header_line = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let (Some(key), Some((lhs, _))) = (key, trimmed.split_once('=')) {
            if lhs.trim() == key {
                return Some(i + 1);
            }
        }
    }
    header_line
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = bundled_source(name).ok_or_else(|| {
            Error::invalid("scenario", format!("no bundled scenario named {name:?} (have {})", BUNDLED.join(", ")))
        })?;
        Self::parse(text, Path::new(&format!("<bundled:{name}>")), Path::new("."))
    }

    /// Parses scenario text; `origin` labels errors, `base` resolves relative paths.
    pub fn parse(text: &str, origin: &Path, base: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.span().map(|s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        let wrap = |section: &str, key: &str, source: Error| Error::Config {
            path: origin.to_path_buf(),
            line: locate_key(text, section, Some(key)).or_else(|| locate_key(text, section, None)),
            source: Box::new(source),
        };
        let invalid = |section: &str, key: &str, reason: String| {
            wrap(section, key, Error::invalid(format!("{section}.{key}"), reason))
        };
        // Maps a module error onto the config key that produced it.
        let rename = |section: &str, keys: &[(&str, &str)], err: Error| match err {
            Error::Invalid { field, reason } => {
                let key = keys.iter().find(|(f, _)| *f == field).map(|(_, k)| *k).unwrap_or(field.as_str()).to_string();
                invalid(section, &key, reason)
            }
            other => wrap(section, "", other),
        };

        let p = &raw.pulse;
        let pulse_keys = [("t0", "t0_us"), ("depth", "depth"), ("mod_freq", "mod_khz"), ("center", "center_us")];
        let width = match (p.t0_us, p.fwhm_us) {
            (Some(t0), None) => Ok(t0 * US),
            (None, Some(fwhm)) => Ok(0.5 * fwhm * US),
            _ => Err(invalid("pulse", "t0_us", "give exactly one of t0_us or fwhm_us".into())),
        }?;
        let pulse = match p.kind.as_str() {
            "gaussian" => {
                if p.depth.is_some() || p.mod_khz.is_some() {
                    return Err(invalid("pulse", "kind", "depth/mod_khz only apply to kind = \"amg\"".into()));
                }
                PulseSpec::gaussian(width, p.center_us * US)
            }
            "amg" => {
                let depth = p.depth.ok_or_else(|| invalid("pulse", "depth", "required for kind = \"amg\"".into()))?;
                let mod_khz =
                    p.mod_khz.ok_or_else(|| invalid("pulse", "mod_khz", "required for kind = \"amg\"".into()))?;
                PulseSpec::amg(width, depth, mod_khz * KHZ, p.center_us * US)
            }
            other => {
                return Err(invalid("pulse", "kind", format!("expected \"gaussian\" or \"amg\", got {other:?}")));
            }
        }
        .map_err(|e| rename("pulse", &pulse_keys, e))?;

        let grid = match (raw.grid.n, raw.grid.window_us) {
            (None, None) => SamplingGrid::for_pulse(&pulse),
            (n, window) => {
                let default = SamplingGrid::for_pulse(&pulse);
                let n = n.unwrap_or(default.n());
                let window = window.map(|w| w * US).unwrap_or(default.window());
                SamplingGrid::centered(n, window, pulse.center())
                    .map_err(|e| rename("grid", &[("n", "n"), ("window", "window_us")], e))?
            }
        };
        pulse.synthesize(&grid).map_err(|e| wrap("grid", "window_us", e))?;

        let c = &raw.channel;
        let medium_keys = [
            ("gamma_eit", "gamma_khz"),
            ("z", "z"),
            ("scale", "scale"),
            ("peak", "peak"),
            ("background", "background"),
            ("fwhm", "fwhm_khz"),
        ];
        let medium = match (c.peak, c.background, c.fwhm_khz, c.gamma_khz, c.z) {
            (Some(peak), Some(bg), Some(fwhm), None, None) => calibrate_from_transmission(peak, bg, fwhm * KHZ),
            (None, None, None, Some(gamma), Some(z)) => EitMedium::new(gamma * KHZ, z, c.scale.unwrap_or(1.0)),
            (None, None, None, None, None) => {
                Err(Error::invalid("peak", "give peak/background/fwhm_khz or gamma_khz/z for the medium"))
            }
            _ => Err(Error::invalid("peak", "give either peak/background/fwhm_khz or gamma_khz/z/scale, not a mix")),
        }
        .map_err(|e| rename("channel", &medium_keys, e))?;

        let measured = match &c.transmission_file {
            Some(file) => {
                let path = base.join(file);
                let extrapolation = c.extrapolation.unwrap_or(medium.background());
                Some(
                    MeasuredTransmission::load(&path, extrapolation)
                        .map_err(|e| rename("channel", &[("extrapolation_value", "extrapolation")], e))?,
                )
            }
            None => None,
        };
        let channel = match (c.model.as_str(), measured) {
            ("analytic", None) => Channel::analytic(medium),
            ("hybrid", Some(t)) => Channel::hybrid(t, medium),
            ("measured", Some(t)) => Channel::amplitude_only(AmplitudeSource::Measured(t)),
            ("analytic", Some(_)) => {
                return Err(invalid("channel", "transmission_file", "not used by model = \"analytic\"".into()));
            }
            ("hybrid" | "measured", None) => {
                return Err(invalid("channel", "transmission_file", format!("required for model = {:?}", c.model)));
            }
            (other, _) => {
                return Err(invalid(
                    "channel",
                    "model",
                    format!("expected \"analytic\", \"hybrid\" or \"measured\", got {other:?}"),
                ));
            }
        };

        let source = match raw.compensation.source.as_str() {
            "model" => TransmissionSource::Model,
            "measured" => TransmissionSource::Measured,
            other => {
                return Err(invalid(
                    "compensation",
                    "source",
                    format!("expected \"model\" or \"measured\", got {other:?}"),
                ));
            }
        };
        if source == TransmissionSource::Measured && channel.measured().is_none() {
            return Err(invalid("compensation", "source", "\"measured\" needs channel.transmission_file".into()));
        }
        let compensation =
            CompensationConfig::new(raw.compensation.floor, source).map_err(|e| rename("compensation", &[], e))?;

        let name = raw.scenario.name.unwrap_or_else(|| {
            origin.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
        });
        Ok(Scenario {
            name,
            focus: raw.scenario.focus,
            pulse,
            grid,
            channel,
            compensation,
            output_dir: raw.output.dir.map(|d| base.join(d)),
        })
    }
}

/// Delays of the decomposed AMG components, microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub carrier_delay_us: f64,
    pub left_delay_us: f64,
    pub right_delay_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub delay_us: f64,
    pub loss: f64,
    pub nrmse: f64,
    pub fwhm_us: f64,
}

impl From<PulseMetrics> for MetricsSummary {
    fn from(m: PulseMetrics) -> Self {
        Self { delay_us: m.delay / US, loss: m.loss, nrmse: m.nrmse, fwhm_us: m.fwhm_time / US }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumSummary {
    pub gamma_khz: f64,
    pub z: f64,
    pub scale: f64,
    pub group_delay_resonance_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary {
    pub n: usize,
    pub dt_us: f64,
    pub df_khz: f64,
    pub window_us: f64,
}

/// Everything `run_scenario` measured; serialized to `summary.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub grid: GridSummary,
    pub medium: Option<MediumSummary>,
    pub output: MetricsSummary,
    pub recovered: MetricsSummary,
    pub output_edge_energy: f64,
    pub components: Option<ComponentSummary>,
}

impl Report {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }
}

/// Files written by [`run_scenario`], in order.
pub const ARTIFACTS: [&str; 13] = [
    "input_intensity.csv",
    "output_intensity.csv",
    "recovered_intensity.csv",
    "input_spectrum.csv",
    "output_spectrum.csv",
    "recovered_spectrum.csv",
    "compensated_intensity_spectrum.csv",
    "transmission.csv",
    "gain_spectrum.csv",
    "component_reference.csv",
    "component_carrier.csv",
    "component_left.csv",
    "component_right.csv",
];

/// Runs the full pipeline and writes its artifacts into `out_dir`.
///
/// Component files are written only for AMG pulses. The run is
/// deterministic: identical scenarios produce byte-identical files.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<Report> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, text: String| {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    };

    log::info!(
        "{}: n = {}, dt = {:e} s, window = {:e} s -> {}",
        s.name,
        s.grid.n(),
        s.grid.dt(),
        s.grid.window(),
        out_dir.display()
    );
    let input = s.pulse.synthesize(&s.grid)?;
    let s_in = dft(&input);
    let s_out = propagate_spectrum(&s_in, &s.channel);
    let output = idft(&s_out);
    let edge = edge_energy_fraction(&output);
    if let Some(share) = crate::propagation::wrap_risk(&output) {
        log::warn!("{}: {share:.3e} of the output energy sits at the window edges", s.name);
    }

    let transmission = transmission_profile(&s.channel, s.compensation.source(), &s.grid)?;
    let s_rec = recover_spectrum(&s_out, &transmission, &s.compensation);
    let recovered = idft(&s_rec);
    let compensated = compensate_intensity_spectrum(&intensity_spectrum(&s_out), &transmission, &s.compensation);
    let gain = export_gain_spectrum(&transmission, &s.compensation);

    write("input_intensity.csv", intensity_of(&input).to_csv())?;
    write("output_intensity.csv", intensity_of(&output).to_csv())?;
    write("recovered_intensity.csv", intensity_of(&recovered).to_csv())?;
    write("input_spectrum.csv", s_in.to_csv_complex())?;
    write("output_spectrum.csv", s_out.to_csv_complex())?;
    write("recovered_spectrum.csv", s_rec.to_csv_complex())?;
    let per_bin = |header: &[&str], values: &[f64]| {
        let rows: Vec<[f64; 2]> = s.grid.detunings().zip(values).map(|(d, &v)| [d, v]).collect();
        csvio::format_table(header, rows.iter().map(|r| r.as_slice()))
    };
    write("compensated_intensity_spectrum.csv", per_bin(&crate::spectral::Spectrum::HEADER_INTENSITY, &compensated))?;
    write("transmission.csv", per_bin(&MeasuredTransmission::HEADER, &transmission))?;
    write("gain_spectrum.csv", gain_spectrum_csv(&s.grid, &gain))?;

    let components = match s.pulse.mod_freq() {
        Some(freq) => {
            let d = decompose_components(&s_out, &s_in, freq)?;
            write("component_reference.csv", intensity_of(&d.reference).to_csv())?;
            write("component_carrier.csv", intensity_of(&d.carrier).to_csv())?;
            write("component_left.csv", intensity_of(&d.left).to_csv())?;
            write("component_right.csv", intensity_of(&d.right).to_csv())?;
            Some(ComponentSummary {
                carrier_delay_us: d.delays.carrier / US,
                left_delay_us: d.delays.left / US,
                right_delay_us: d.delays.right / US,
            })
        }
        None => None,
    };

    let report = Report {
        name: s.name.clone(),
        grid: GridSummary {
            n: s.grid.n(),
            dt_us: s.grid.dt() / US,
            df_khz: s.grid.df() / KHZ,
            window_us: s.grid.window() / US,
        },
        medium: s.channel.medium().map(|m| MediumSummary {
            gamma_khz: m.gamma_eit() / KHZ,
            z: m.z(),
            scale: m.scale(),
            group_delay_resonance_us: m.group_delay(0.0) / US,
        }),
        output: measure_metrics(&output, &input)?.into(),
        recovered: measure_metrics(&recovered, &input)?.into(),
        output_edge_energy: edge,
        components,
    };
    write("summary.toml", report.to_toml())?;
    Ok(report)
}

/// Runs scenarios concurrently, one thread each. Output directories must be distinct.
pub fn run_many(jobs: &[(Scenario, PathBuf)]) -> Vec<Result<Report>> {
    for (i, (_, dir)) in jobs.iter().enumerate() {
        if jobs[..i].iter().any(|(_, other)| other == dir) {
            let err = || Error::invalid("output.dir", format!("{} is shared by several scenarios", dir.display()));
            return jobs.iter().map(|_| Err(err())).collect();
        }
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|(s, dir)| scope.spawn(move || run_scenario(s, dir))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    })
}
