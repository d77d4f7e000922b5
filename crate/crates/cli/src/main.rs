//! `slowlight` command-line front end.
//!
//! Time-domain files are `time_s,value` intensity traces; fields are taken as
//! √I, which is exact for the nonnegative pulses produced by `synth`.
//! Spectra are `detuning_hz,re,im`. Results go to stdout as `key = value`
//! lines; failures print one `error code=<class> exit=<n>: <message>` line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slowlight::analysis::{
    compensate_intensity_spectrum, decompose_components, export_gain_spectrum, gain_spectrum_csv, measure_metrics,
    recover_waveform, transmission_profile, CompensationConfig, TransmissionSource, DEFAULT_FLOOR,
};
use slowlight::csvio;
use slowlight::medium::{calibrate_from_transmission, EitMedium, MeasuredTransmission};
use slowlight::propagation::{propagate_waveform, wrap_risk, AmplitudeSource, Channel};
use slowlight::scenario::{run_many, Scenario};
use slowlight::signal::{amplitude_from_intensity, intensity_of, IntensityTrace, PulseSpec, SamplingGrid, Waveform};
use slowlight::spectral::{dft, intensity_spectrum, Spectrum};
use slowlight::{Error, Result};

const US: f64 = 1e-6;
const KHZ: f64 = 1e3;

#[derive(Parser)]
#[command(name = "slowlight", version, about = "Slow-light pulse propagation through an EIT medium")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a Gaussian or AMG probe pulse as an intensity trace.
    Synth(SynthArgs),
    /// Fit Γ and Z to a measured EIT window (peak, background, FWHM).
    Calibrate(CalibrateArgs),
    /// Propagate an intensity trace through the medium.
    Propagate(PropagateArgs),
    /// Undo the amplitude loss of a propagated spectrum.
    Compensate(CompensateArgs),
    /// Split an AMG output into carrier and sideband pulses.
    Decompose(DecomposeArgs),
    /// Delay, loss, shape error and width of one trace against a reference.
    Metrics(MetricsArgs),
    /// Run scenario files or bundled scenarios.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussian,
    Amg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Intensity half width at half maximum.
    #[arg(long, conflicts_with = "fwhm_us")]
    t0_us: Option<f64>,
    /// Intensity full width at half maximum.
    #[arg(long)]
    fwhm_us: Option<f64>,
    #[arg(long)]
    depth: Option<f64>,
    #[arg(long)]
    mod_khz: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    center_us: f64,
    /// Sample count; defaults to the automatic grid.
    #[arg(long)]
    n: Option<usize>,
    /// Window length; defaults to the automatic grid.
    #[arg(long)]
    window_us: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, requires_all = ["background", "fwhm_khz"])]
    peak: Option<f64>,
    #[arg(long)]
    background: Option<f64>,
    #[arg(long)]
    fwhm_khz: Option<f64>,
    /// Read peak, background and FWHM off a `detuning_hz,transmission` table instead.
    #[arg(long, conflicts_with = "peak")]
    transmission: Option<PathBuf>,
}

#[derive(Args)]
struct MediumArgs {
    /// Window peak transmission (calibrated medium).
    #[arg(long, requires_all = ["background", "fwhm_khz"], conflicts_with_all = ["gamma_khz", "z"])]
    peak: Option<f64>,
    #[arg(long)]
    background: Option<f64>,
    #[arg(long)]
    fwhm_khz: Option<f64>,
    /// EIT half width (explicit medium).
    #[arg(long, requires = "z")]
    gamma_khz: Option<f64>,
    /// Optical depth parameter (explicit medium).
    #[arg(long, requires = "gamma_khz")]
    z: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Measured `detuning_hz,transmission` table. Alone it gives an
    /// amplitude-only channel; with a medium, the medium supplies the phase.
    #[arg(long)]
    transmission: Option<PathBuf>,
    /// Transmission outside the table; defaults to the medium background, else 0.
    #[arg(long)]
    extrapolation: Option<f64>,
}

impl MediumArgs {
    fn medium(&self) -> Result<Option<EitMedium>> {
        match (self.peak, self.background, self.fwhm_khz, self.gamma_khz, self.z) {
            (Some(p), Some(b), Some(f), None, None) => calibrate_from_transmission(p, b, f * KHZ).map(Some),
            (None, None, None, Some(g), Some(z)) => EitMedium::new(g * KHZ, z, self.scale).map(Some),
            (None, None, None, None, None) => Ok(None),
            _ => Err(invalid("medium", "give --peak/--background/--fwhm-khz or --gamma-khz/--z")),
        }
    }

    fn channel(&self) -> Result<Channel> {
        let medium = self.medium()?;
        let table = match &self.transmission {
            Some(path) => {
                let extrapolation = self.extrapolation.or(medium.map(|m| m.background())).unwrap_or(0.0);
                Some(MeasuredTransmission::load(path, extrapolation)?)
            }
            None => None,
        };
        match (medium, table) {
            (Some(m), None) => Ok(Channel::analytic(m)),
            (Some(m), Some(t)) => Ok(Channel::hybrid(t, m)),
            (None, Some(t)) => Ok(Channel::amplitude_only(AmplitudeSource::Measured(t))),
            (None, None) => Err(invalid("medium", "no medium given; pass medium parameters or --transmission")),
        }
    }
}

#[derive(Args)]
struct PropagateArgs {
    /// Input intensity trace.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    medium: MediumArgs,
    /// Output intensity trace; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the complex output spectrum here.
    #[arg(long)]
    spectrum_out: Option<PathBuf>,
    /// Fail (exit 3) instead of warning when the output wraps around the window.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Model,
    Measured,
}

#[derive(Args)]
struct CompensateArgs {
    /// Complex output spectrum from `propagate --spectrum-out`.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    medium: MediumArgs,
    #[arg(long, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
    /// Transmission used for compensation; defaults to the table when one is given.
    #[arg(long, value_enum)]
    source: Option<Source>,
    /// Start time of the original trace; the window is centered on 0 otherwise.
    #[arg(long)]
    t_start_us: Option<f64>,
    /// Recovered intensity trace; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-bin intensity gain.
    #[arg(long)]
    gain_out: Option<PathBuf>,
    /// Also write the compensated intensity spectrum.
    #[arg(long)]
    intensity_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Complex output spectrum.
    #[arg(long = "out")]
    output: PathBuf,
    /// Input pulse, as an intensity trace or complex spectrum.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    mod_khz: f64,
    /// Directory for the component intensity traces.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Output intensity trace.
    #[arg(long = "out")]
    output: PathBuf,
    /// Reference intensity trace.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario files.
    files: Vec<PathBuf>,
    /// Bundled scenario names (fig2a, fig2b, fig3a, fig3b, fig4); repeatable.
    #[arg(long)]
    bundled: Vec<String>,
    /// Output root. With one scenario it is the output directory itself,
    /// with several each gets a subdirectory named after it.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn invalid(field: &str, reason: &str) -> Error {
    Error::Invalid { field: field.into(), reason: reason.into() }
}

fn emit(out: Option<&Path>, text: String) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_field(path: &Path) -> Result<Waveform> {
    amplitude_from_intensity(&IntensityTrace::load(path)?)
}

/// Re-expresses `s` on `grid` when both describe the same bins.
fn conform(s: &Spectrum, grid: &SamplingGrid) -> Result<Spectrum> {
    let g = s.grid();
    if g.n() != grid.n() || (g.df() - grid.df()).abs() > 1e-9 * grid.df() {
        return Err(invalid("spectrum", "input and output use different frequency grids"));
    }
    Spectrum::new(*grid, s.samples().to_vec())
}

fn synth(a: SynthArgs) -> Result<()> {
    let width = match (a.t0_us, a.fwhm_us) {
        (Some(t0), None) => t0 * US,
        (None, Some(fwhm)) => 0.5 * fwhm * US,
        _ => return Err(invalid("t0_us", "give --t0-us or --fwhm-us")),
    };
    let pulse = match a.kind {
        Kind::Gaussian => PulseSpec::gaussian(width, a.center_us * US)?,
        Kind::Amg => {
            let depth = a.depth.ok_or_else(|| invalid("depth", "required for --kind amg"))?;
            let freq = a.mod_khz.ok_or_else(|| invalid("mod_khz", "required for --kind amg"))?;
            PulseSpec::amg(width, depth, freq * KHZ, a.center_us * US)?
        }
    };
    let auto = SamplingGrid::for_pulse(&pulse);
    let grid = match (a.n, a.window_us) {
        (None, None) => auto,
        (n, w) => SamplingGrid::centered(n.unwrap_or(auto.n()), w.map_or(auto.window(), |w| w * US), pulse.center())?,
    };
    emit(a.out.as_deref(), intensity_of(&pulse.synthesize(&grid)?).to_csv())
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let m = match (&a.transmission, a.peak, a.background, a.fwhm_khz) {
        (Some(path), ..) => {
            let table = MeasuredTransmission::load(path, 0.0)?;
            let (peak, background, fwhm) = window_of(&table)?;
            calibrate_from_transmission(peak, background, fwhm)?
        }
        (None, Some(p), Some(b), Some(f)) => calibrate_from_transmission(p, b, f * KHZ)?,
        _ => return Err(invalid("peak", "give --peak/--background/--fwhm-khz or --transmission")),
    };
    println!("gamma_khz = {}", m.gamma_eit() / KHZ);
    println!("z = {}", m.z());
    println!("scale = {}", m.scale());
    println!("group_delay_us = {}", m.group_delay(0.0) / US);
    Ok(())
}

/// Peak, background (the lower of the two table ends) and full width at
/// half of peak + background, interpolated between table points.
fn window_of(table: &MeasuredTransmission) -> Result<(f64, f64, f64)> {
    let pts = table.points();
    let (ipeak, &(_, peak)) =
        pts.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("table is never empty");
    let background = pts[0].1.min(pts[pts.len() - 1].1);
    let half = 0.5 * (peak + background);
    let cross = |range: &mut dyn Iterator<Item = usize>| {
        let mut prev = ipeak;
        for i in range {
            let (x0, y0) = pts[prev];
            let (x1, y1) = pts[i];
            if y1 <= half {
                return Some(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
            }
            prev = i;
        }
        None
    };
    let right = cross(&mut (ipeak + 1..pts.len()));
    let left = cross(&mut (0..ipeak).rev());
    match (left, right) {
        (Some(l), Some(r)) if peak > background => Ok((peak, background, r - l)),
        _ => Err(Error::Numeric("transmission table does not resolve a window above its background".into())),
    }
}

fn propagate(a: PropagateArgs) -> Result<()> {
    let channel = a.medium.channel()?;
    let out = propagate_waveform(&load_field(&a.input)?, &channel);
    if let Some(share) = wrap_risk(&out) {
        if a.strict {
            return Err(Error::Numeric(format!(
                "{share:.3e} of the output energy sits at the window edges; widen the window"
            )));
        }
    }
    if let Some(path) = &a.spectrum_out {
        emit(Some(path), dft(&out).to_csv_complex())?;
    }
    emit(a.out.as_deref(), intensity_of(&out).to_csv())
}

fn compensate(a: CompensateArgs) -> Result<()> {
    let channel = a.medium.channel()?;
    let source = match a.source {
        Some(Source::Model) => TransmissionSource::Model,
        Some(Source::Measured) => TransmissionSource::Measured,
        None if channel.measured().is_some() => TransmissionSource::Measured,
        None => TransmissionSource::Model,
    };
    let cfg = CompensationConfig::new(a.floor, source)?;
    let s_out = Spectrum::load(&a.input, a.t_start_us.map(|t| t * US))?;
    let t = transmission_profile(&channel, source, s_out.grid())?;
    if let Some(path) = &a.gain_out {
        emit(Some(path), gain_spectrum_csv(s_out.grid(), &export_gain_spectrum(&t, &cfg)))?;
    }
    if let Some(path) = &a.intensity_out {
        let comp = compensate_intensity_spectrum(&intensity_spectrum(&s_out), &t, &cfg);
        let rows: Vec<[f64; 2]> = s_out.grid().detunings().zip(comp).map(|(d, v)| [d, v]).collect();
        let text = csvio::format_table(&Spectrum::HEADER_INTENSITY, rows.iter().map(|r| r.as_slice()));
        emit(Some(path), text)?;
    }
    emit(a.out.as_deref(), intensity_of(&recover_waveform(&s_out, &t, &cfg)).to_csv())
}

fn is_trace(path: &Path) -> Result<bool> {
    let table = csvio::read_table(path)?;
    Ok(table.header == IntensityTrace::HEADER)
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let (s_in, t_start) = if is_trace(&a.input)? {
        let w = load_field(&a.input)?;
        let t_start = w.grid().t_start();
        (dft(&w), Some(t_start))
    } else {
        (Spectrum::load(&a.input, None)?, None)
    };
    let s_out = Spectrum::load(&a.output, t_start)?;
    let s_in = conform(&s_in, s_out.grid())?;
    let d = decompose_components(&s_out, &s_in, a.mod_khz * KHZ)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        for (name, w) in [
            ("component_reference.csv", &d.reference),
            ("component_carrier.csv", &d.carrier),
            ("component_left.csv", &d.left),
            ("component_right.csv", &d.right),
        ] {
            emit(Some(&dir.join(name)), intensity_of(w).to_csv())?;
        }
    }
    println!("carrier_delay_us = {}", d.delays.carrier / US);
    println!("left_delay_us = {}", d.delays.left / US);
    println!("right_delay_us = {}", d.delays.right / US);
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let input = load_field(&a.input)?;
    let output = load_field(&a.output)?;
    let (gi, go) = (input.grid(), output.grid());
    // traces rebuilt from a spectrum file can sit an ulp off the original origin
    if gi.n() != go.n()
        || (gi.dt() - go.dt()).abs() > 1e-9 * gi.dt()
        || (gi.t_start() - go.t_start()).abs() > 1e-9 * gi.dt()
    {
        return Err(invalid("out", "traces must share a time grid"));
    }
    let output = Waveform::new(*gi, output.into_samples())?;
    let m = measure_metrics(&output, &input)?;
    println!("delay_us = {}", m.delay / US);
    println!("loss = {}", m.loss);
    println!("nrmse = {}", m.nrmse);
    println!("fwhm_us = {}", m.fwhm_time / US);
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut scenarios = Vec::new();
    for path in &a.files {
        scenarios.push(Scenario::load(path)?);
    }
    for name in &a.bundled {
        scenarios.push(Scenario::bundled(name)?);
    }
    if scenarios.is_empty() {
        return Err(invalid("run", "give scenario files or --bundled names"));
    }
    let single = scenarios.len() == 1;
    let jobs: Vec<(Scenario, PathBuf)> = scenarios
        .into_iter()
        .map(|s| {
            let dir = match (&a.out_dir, &s.output_dir) {
                (Some(root), _) if single => root.clone(),
                (Some(root), _) => root.join(&s.name),
                (None, Some(dir)) => dir.clone(),
                (None, None) => PathBuf::from(&s.name),
            };
            (s, dir)
        })
        .collect();
    let mut first_err = None;
    for ((s, dir), result) in jobs.iter().zip(run_many(&jobs)) {
        match result {
            Ok(r) => {
                println!("[{}]", s.name);
                println!("dir = {:?}", dir.display().to_string());
                println!("output_delay_us = {}", r.output.delay_us);
                println!("recovered_delay_us = {}", r.recovered.delay_us);
                if let Some(c) = r.components {
                    println!(
                        "component_delays_us = [{}, {}, {}]",
                        c.carrier_delay_us, c.left_delay_us, c.right_delay_us
                    );
                }
            }
            Err(e) => {
                log::error!("{}: {e}", s.name);
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Propagate(a) => propagate(a),
        Command::Compensate(a) => compensate(a),
        Command::Decompose(a) => decompose(a),
        Command::Metrics(a) => metrics(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error code={} exit={code}: {e}", e.code());
            ExitCode::from(code as u8)
        }
    }
}
