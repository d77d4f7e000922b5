//! Time grids and probe pulse synthesis.
//!
//! The Gaussian probe has intensity `exp[-(ln2)·t²/T₀²]` (half points at
//! ±T₀, so the intensity FWHM is 2·T₀). The cosine-type AMG probe multiplies
//! the Gaussian field by `1 + A·cos(2πδt)`. Fields are real and nonnegative
//! with a unit-peak Gaussian envelope.

use std::f64::consts::{LN_2, PI};
use std::path::Path;

use num_complex::Complex64;

use crate::csvio;
use crate::error::{Error, Result};

/// Smallest window, in units of T₀, a pulse may be synthesized on.
pub const MIN_WINDOW_T0: f64 = 8.0;

/// Uniform time lattice `t_k = t_start + k·dt`, `k = 0..n`, and its conjugate
/// detuning lattice `Δ_j = j·df`, `j = -n/2..n/2`, with `df = 1/(n·dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    n: usize,
    dt: f64,
    df: f64,
    t_start: f64,
}

impl SamplingGrid {
    pub fn new(n: usize, dt: f64, t_start: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::invalid("n", format!("must be a power of two >= 8, got {n}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        Ok(Self { n, dt, df: 1.0 / (n as f64 * dt), t_start })
    }

    /// Grid defined by its detuning spacing; `dt = 1/(n·df)`.
    pub fn from_detuning_spacing(n: usize, df: f64, t_start: f64) -> Result<Self> {
        if !(df.is_finite() && df > 0.0) {
            return Err(Error::invalid("df", format!("must be > 0, got {df}")));
        }
        let mut grid = Self::new(n, 1.0 / (n as f64 * df), t_start)?;
        grid.df = df;
        Ok(grid)
    }

    /// `n` samples spanning `window` seconds, centered on `center`.
    pub fn centered(n: usize, window: f64, center: f64) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::invalid("window", format!("must be > 0, got {window}")));
        }
        Self::new(n, window / n as f64, center - 0.5 * window)
    }

    /// Default grid for a pulse.
    ///
    /// The window is the larger of 16·T₀ and the length giving a detuning
    /// spacing of one eighth of the intensity-spectrum FWHM; for AMG pulses it
    /// is stretched so ±δ fall exactly on bins. The sample count is the
    /// smallest power of two, at least [`Self::MIN_DEFAULT_N`], whose Nyquist
    /// frequency is ≥ 8·(δ + FWHM).
    pub fn for_pulse(spec: &PulseSpec) -> Self {
        let t0 = spec.t0();
        let bw = spec.spectral_fwhm();
        let mut window = (16.0 * t0).max(8.0 / bw);
        let mod_freq = spec.mod_freq().unwrap_or(0.0);
        if mod_freq > 0.0 {
            window = (window * mod_freq).ceil() / mod_freq;
        }
        let dt_max = 1.0 / (16.0 * (mod_freq + bw));
        let n = ((window / dt_max).ceil() as usize).next_power_of_two().max(Self::MIN_DEFAULT_N);
        Self::centered(n, window, spec.center()).expect("default grid parameters are valid")
    }

    pub const MIN_DEFAULT_N: usize = 1024;

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn window(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.time(k))
    }

    /// Detuning of spectrum bin `j` (0-based, ascending; bin `n/2` is Δ = 0).
    pub fn detuning(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.df()
    }

    pub fn detunings(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.detuning(j))
    }

    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseKind {
    Gaussian,
    /// Cosine amplitude-modulated Gaussian with depth `depth` and modulation frequency `freq` (Hz).
    Amg {
        depth: f64,
        freq: f64,
    },
}

/// Probe pulse parameters. `t0` is the half-width at half maximum of the
/// intensity, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    kind: PulseKind,
    t0: f64,
    center: f64,
}

impl PulseSpec {
    pub fn gaussian(t0: f64, center: f64) -> Result<Self> {
        Self::validated(PulseKind::Gaussian, t0, center)
    }

    pub fn amg(t0: f64, depth: f64, freq: f64, center: f64) -> Result<Self> {
        Self::validated(PulseKind::Amg { depth, freq }, t0, center)
    }

    /// Gaussian specified by the full width at half maximum of its intensity.
    pub fn gaussian_from_intensity_fwhm(fwhm: f64, center: f64) -> Result<Self> {
        Self::gaussian(0.5 * fwhm, center)
    }

    pub fn amg_from_intensity_fwhm(fwhm: f64, depth: f64, freq: f64, center: f64) -> Result<Self> {
        Self::amg(0.5 * fwhm, depth, freq, center)
    }

    fn validated(kind: PulseKind, t0: f64, center: f64) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::invalid("t0", format!("must be > 0, got {t0}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid("center", "must be finite"));
        }
        if let PulseKind::Amg { depth, freq } = kind {
            if !(0.0..=1.0).contains(&depth) {
                return Err(Error::invalid(
                    "depth",
                    format!("must be in [0, 1] to keep the field nonnegative, got {depth}"),
                ));
            }
            if !(freq.is_finite() && freq > 0.0) {
                return Err(Error::invalid("mod_freq", format!("must be > 0, got {freq}")));
            }
        }
        Ok(Self { kind, t0, center })
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn depth(&self) -> f64 {
        match self.kind {
            PulseKind::Gaussian => 0.0,
            PulseKind::Amg { depth, .. } => depth,
        }
    }

    pub fn mod_freq(&self) -> Option<f64> {
        match self.kind {
            PulseKind::Gaussian => None,
            PulseKind::Amg { freq, .. } => Some(freq),
        }
    }

    /// FWHM of the Gaussian envelope's intensity spectrum, ln2/(πT₀).
    pub fn spectral_fwhm(&self) -> f64 {
        LN_2 / (PI * self.t0)
    }

    /// Field amplitude at time `t`.
    pub fn field(&self, t: f64) -> f64 {
        let s = t - self.center;
        let envelope = (-LN_2 * s * s / (2.0 * self.t0 * self.t0)).exp();
        match self.kind {
            PulseKind::Gaussian => envelope,
            PulseKind::Amg { depth, freq } => envelope * (1.0 + depth * (2.0 * PI * freq * s).cos()),
        }
    }

    pub fn intensity(&self, t: f64) -> f64 {
        self.field(t).powi(2)
    }

    fn check_support(&self, grid: &SamplingGrid) -> Result<()> {
        let half = 0.5 * MIN_WINDOW_T0 * self.t0;
        if grid.window() < MIN_WINDOW_T0 * self.t0 {
            return Err(Error::Numeric(format!(
                "grid window {:.4e} s is shorter than {MIN_WINDOW_T0}·T0 = {:.4e} s; pulse would be truncated",
                grid.window(),
                MIN_WINDOW_T0 * self.t0
            )));
        }
        if self.center - half < grid.t_start() || self.center + half > grid.t_start() + grid.window() {
            return Err(Error::Numeric(format!(
                "pulse centered at {:.4e} s does not fit in the grid [{:.4e}, {:.4e}) s",
                self.center,
                grid.t_start(),
                grid.t_start() + grid.window()
            )));
        }
        Ok(())
    }

    /// Samples the pulse field on `grid`.
    pub fn synthesize(&self, grid: &SamplingGrid) -> Result<Waveform> {
        self.check_support(grid)?;
        let samples = grid.times().map(|t| Complex64::new(self.field(t), 0.0)).collect();
        Ok(Waveform { grid: *grid, samples })
    }
}

pub fn synth_gaussian(spec: &PulseSpec, grid: &SamplingGrid) -> Result<Waveform> {
    if spec.kind != PulseKind::Gaussian {
        return Err(Error::invalid("kind", "synth_gaussian needs a Gaussian pulse spec"));
    }
    spec.synthesize(grid)
}

pub fn synth_amg(spec: &PulseSpec, grid: &SamplingGrid) -> Result<Waveform> {
    if !matches!(spec.kind, PulseKind::Amg { .. }) {
        return Err(Error::invalid("kind", "synth_amg needs an AMG pulse spec"));
    }
    spec.synthesize(grid)
}

/// Complex field samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    grid: SamplingGrid,
    samples: Vec<Complex64>,
}

impl Waveform {
    pub fn new(grid: SamplingGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::invalid("samples", format!("expected {} samples, got {}", grid.n(), samples.len())));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_real(grid: SamplingGrid, samples: &[f64]) -> Result<Self> {
        Self::new(grid, samples.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(grid: SamplingGrid) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Σ|e|²·dt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.dt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|&s| s * factor).collect() }
    }
}

/// Detector-view intensity samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    grid: SamplingGrid,
    samples: Vec<f64>,
}

impl IntensityTrace {
    pub const HEADER: [&'static str; 2] = ["time_s", "value"];

    pub fn new(grid: SamplingGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::invalid("samples", format!("expected {} samples, got {}", grid.n(), samples.len())));
        }
        if let Some(i) = samples.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("intensity", format!("sample {i} is negative or NaN ({})", samples[i])));
        }
        Ok(Self { grid, samples })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = self.grid.times().zip(&self.samples).map(|(t, &v)| [t, v]).collect();
        csvio::format_table(&Self::HEADER, rows.iter().map(|r| r.as_slice()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Loads a `time_s,value` CSV. Sample spacing must be uniform to 1e-6
    /// relative and the sample count a power of two.
    pub fn load(path: &Path) -> Result<Self> {
        let table = csvio::read_table(path)?;
        table.expect_header(&Self::HEADER, path)?;
        Self::from_table(&table, path)
    }

    pub(crate) fn from_table(table: &csvio::Table, path: &Path) -> Result<Self> {
        let parse_err = |line: Option<usize>, message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let times: Vec<f64> = table.column(0).collect();
        if times.len() < 2 {
            return Err(parse_err(None, "need at least two samples".into()));
        }
        let n = times.len();
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        if !(dt > 0.0) {
            return Err(parse_err(None, "time column must be increasing".into()));
        }
        for (i, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if ((step - dt) / dt).abs() > 1e-6 {
                return Err(parse_err(
                    Some(table.lines[i + 1]),
                    format!("nonuniform sample spacing {step:e} s (expected {dt:e} s)"),
                ));
            }
        }
        let dt = exact_step(&times, dt);
        let grid = SamplingGrid::new(n, dt, times[0]).map_err(|e| parse_err(None, e.to_string()))?;
        let values: Vec<f64> = table.column(1).collect();
        if let Some(i) = values.iter().position(|v| *v < 0.0) {
            return Err(parse_err(Some(table.lines[i]), format!("negative intensity {}", values[i])));
        }
        Self::new(grid, values)
    }
}

/// Searches a few ulps around `estimate` for a step that regenerates every
/// tabulated time bit-for-bit as `t[0] + k·step`; falls back to `estimate`.
fn exact_step(times: &[f64], estimate: f64) -> f64 {
    let regenerates = |step: f64| times.iter().enumerate().all(|(k, &t)| times[0] + k as f64 * step == t);
    let mut up = estimate;
    let mut down = estimate;
    for _ in 0..=16 {
        if regenerates(up) {
            return up;
        }
        if regenerates(down) {
            return down;
        }
        up = up.next_up();
        down = down.next_down();
    }
    estimate
}

/// |e(t)|² sample-wise.
pub fn intensity_of(w: &Waveform) -> IntensityTrace {
    IntensityTrace { grid: w.grid, samples: w.samples.iter().map(|s| s.norm_sqr()).collect() }
}

/// √I(t) as a real nonnegative field.
pub fn amplitude_from_intensity(trace: &IntensityTrace) -> Result<Waveform> {
    if let Some(i) = trace.samples.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::invalid(
            "intensity",
            format!("sample {i} is negative ({}); clip before taking the square root", trace.samples[i]),
        ));
    }
    Ok(Waveform { grid: trace.grid, samples: trace.samples.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect() })
}
