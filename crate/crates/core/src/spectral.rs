//! Discrete Fourier analysis on a [`SamplingGrid`].
//!
//! The transform pair approximates the continuous Fourier integrals:
//!
//! ```text
//! E(Δ_j) = Σ_k e(t_k)·exp(-i2πΔ_j t_k)·dt
//! e(t_k) = Σ_j E(Δ_j)·exp(+i2πΔ_j t_k)·df
//! ```
//!
//! With this sign pair a spectral factor `exp(-i2πΔτ)` delays the waveform
//! by `+τ`, so a medium phase `Φ(Δ)` with positive slope produces slow light.

use std::f64::consts::{LN_2, PI};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::csvio;
use crate::error::{Error, Result};
use crate::signal::{SamplingGrid, Waveform};

/// Complex amplitude per detuning bin, ascending from `-n/2·df`; bin `n/2` is the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SamplingGrid,
    samples: Vec<Complex64>,
}

impl Spectrum {
    pub const HEADER_COMPLEX: [&'static str; 3] = ["detuning_hz", "re", "im"];
    pub const HEADER_INTENSITY: [&'static str; 2] = ["detuning_hz", "intensity"];

    pub fn new(grid: SamplingGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::invalid("samples", format!("expected {} bins, got {}", grid.n(), samples.len())));
        }
        Ok(Self { grid, samples })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.grid.detunings().collect()
    }

    /// Σ|E|²·df.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.grid.df()
    }

    /// Applies `f(Δ, E)` to every bin.
    pub fn map_bins(&self, mut f: impl FnMut(f64, Complex64) -> Complex64) -> Self {
        let samples = self.grid.detunings().zip(&self.samples).map(|(d, &e)| f(d, e)).collect();
        Self { grid: self.grid, samples }
    }

    pub fn to_csv_complex(&self) -> String {
        let rows: Vec<[f64; 3]> = self.grid.detunings().zip(&self.samples).map(|(d, s)| [d, s.re, s.im]).collect();
        csvio::format_table(&Self::HEADER_COMPLEX, rows.iter().map(|r| r.as_slice()))
    }

    pub fn to_csv_intensity(&self) -> String {
        let rows: Vec<[f64; 2]> = self.grid.detunings().zip(&self.samples).map(|(d, s)| [d, s.norm_sqr()]).collect();
        csvio::format_table(&Self::HEADER_INTENSITY, rows.iter().map(|r| r.as_slice()))
    }

    /// Loads a `detuning_hz,re,im` CSV. The file carries no time origin, so
    /// the grid is placed with `t_start` given, or centered on t = 0.
    pub fn load(path: &Path, t_start: Option<f64>) -> Result<Self> {
        let table = csvio::read_table(path)?;
        table.expect_header(&Self::HEADER_COMPLEX, path)?;
        Self::from_table(&table, path, t_start)
    }

    pub(crate) fn from_table(table: &csvio::Table, path: &Path, t_start: Option<f64>) -> Result<Self> {
        let parse_err = |line: Option<usize>, message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let n = table.rows.len();
        if n < 8 || !n.is_power_of_two() {
            return Err(parse_err(None, format!("bin count must be a power of two >= 8, got {n}")));
        }
        let df = table.rows[n / 2 + 1][0];
        if table.rows[n / 2][0] != 0.0 || !(df > 0.0) {
            return Err(parse_err(
                Some(table.lines[n / 2]),
                "expected the carrier (0 Hz) at bin n/2 and ascending detunings".into(),
            ));
        }
        let window = 1.0 / df;
        let grid = SamplingGrid::from_detuning_spacing(n, df, t_start.unwrap_or(-0.5 * window))
            .map_err(|e| parse_err(None, e.to_string()))?;
        for (j, row) in table.rows.iter().enumerate() {
            let expected = grid.detuning(j);
            if (row[0] - expected).abs() > 1e-6 * df {
                return Err(parse_err(
                    Some(table.lines[j]),
                    format!("detuning {:e} Hz off the uniform lattice (expected {expected:e})", row[0]),
                ));
            }
        }
        let samples = table.rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
        Self::new(grid, samples)
    }
}

/// Index into FFT order for ascending bin `j`.
fn fft_index(j: usize, n: usize) -> usize {
    (j + n / 2) % n
}

pub fn dft(w: &Waveform) -> Spectrum {
    let grid = *w.grid();
    let n = grid.n();
    let mut buf = w.samples().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let samples = (0..n)
        .map(|j| {
            let phase = -2.0 * PI * grid.detuning(j) * grid.t_start();
            buf[fft_index(j, n)] * Complex64::from_polar(grid.dt(), phase)
        })
        .collect();
    Spectrum { grid, samples }
}

pub fn idft(s: &Spectrum) -> Waveform {
    let grid = *s.grid();
    let n = grid.n();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, &e) in s.samples().iter().enumerate() {
        let phase = 2.0 * PI * grid.detuning(j) * grid.t_start();
        buf[fft_index(j, n)] = e * Complex64::from_polar(grid.df(), phase);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Waveform::new(grid, buf).expect("bin count matches grid")
}

/// |E(Δ)|² per bin.
pub fn intensity_spectrum(s: &Spectrum) -> Vec<f64> {
    s.samples().iter().map(|e| e.norm_sqr()).collect()
}

/// Half width at half maximum of a Gaussian pulse's intensity spectrum,
/// ln2/(2πT₀); the full width is ln2/(πT₀).
pub fn gaussian_spectral_half_width(t0: f64) -> f64 {
    LN_2 / (2.0 * PI * t0)
}

/// Three-Gaussian intensity spectrum of a cosine AMG pulse, normalized to a
/// unit carrier:
/// `I₁(Δ) + (A²/4)·[I₁(Δ-δ) + I₁(Δ+δ)]`, `I₁(Δ) = exp[-(ln2)Δ²/Ω²]`, with Ω
/// the spectral half width from [`gaussian_spectral_half_width`]. Cross terms
/// between components are neglected, which holds for δ ≫ Ω.
pub fn amg_spectrum_closed_form(t0: f64, depth: f64, mod_freq: f64, delta: f64) -> f64 {
    let omega = gaussian_spectral_half_width(t0);
    let i1 = |d: f64| (-LN_2 * d * d / (omega * omega)).exp();
    i1(delta) + 0.25 * depth * depth * (i1(delta - mod_freq) + i1(delta + mod_freq))
}

/// Zeroes every bin outside `[lo, hi)`.
pub fn band_extract(s: &Spectrum, lo: f64, hi: f64) -> Spectrum {
    s.map_bins(|d, e| if d >= lo && d < hi { e } else { Complex64::new(0.0, 0.0) })
}

/// Carrier and sideband bands of an AMG spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgBands {
    pub carrier: (f64, f64),
    pub left: (f64, f64),
    pub right: (f64, f64),
}

impl AmgBands {
    /// Splits at ±δ/2 and ±3δ/2.
    pub fn canonical(mod_freq: f64) -> Self {
        Self::with_edges(0.5 * mod_freq, 1.5 * mod_freq)
    }

    /// Carrier `[-inner, inner)`, right `[inner, outer)`, left `[-outer, -inner)`.
    pub fn with_edges(inner: f64, outer: f64) -> Self {
        Self { carrier: (-inner, inner), left: (-outer, -inner), right: (inner, outer) }
    }
}

/// Full width at half maximum of a peaked curve sampled on an ordered axis.
///
/// The half level is `(peak + baseline)/2` (baseline 0 by default); each
/// crossing is the nearest one to the peak, located by linear interpolation.
pub fn fwhm(axis: &[f64], samples: &[f64], baseline: Option<f64>) -> Result<f64> {
    if axis.len() != samples.len() || samples.is_empty() {
        return Err(Error::invalid("samples", "axis and samples must be nonempty and equal length"));
    }
    let peak = argmax(samples);
    let base = baseline.unwrap_or(0.0);
    let half = 0.5 * (samples[peak] + base);
    if !(samples[peak] > base) {
        return Err(Error::Numeric("peak does not rise above the baseline".into()));
    }
    let cross = |i: usize, j: usize| {
        // samples[i] >= half > samples[j]
        let f = (samples[i] - half) / (samples[i] - samples[j]);
        axis[i] + f * (axis[j] - axis[i])
    };
    let left = (0..peak)
        .rev()
        .find(|&j| samples[j] < half)
        .map(|j| cross(j + 1, j))
        .ok_or_else(|| Error::Numeric("no half-maximum crossing left of the peak (truncated?)".into()))?;
    let right = (peak + 1..samples.len())
        .find(|&j| samples[j] < half)
        .map(|j| cross(j - 1, j))
        .ok_or_else(|| Error::Numeric("no half-maximum crossing right of the peak (truncated?)".into()))?;
    Ok(right - left)
}

fn argmax(samples: &[f64]) -> usize {
    samples.iter().enumerate().fold(0, |best, (i, &v)| if v > samples[best] { i } else { best })
}

/// Position of the global maximum, refined by fitting a parabola through the
/// maximum sample and its two neighbours.
pub fn peak_location(axis: &[f64], samples: &[f64]) -> Result<f64> {
    if axis.len() != samples.len() || samples.is_empty() {
        return Err(Error::invalid("samples", "axis and samples must be nonempty and equal length"));
    }
    let i = argmax(samples);
    if i == 0 || i + 1 == samples.len() {
        return Ok(axis[i]);
    }
    let (x0, x1, x2) = (axis[i - 1], axis[i], axis[i + 1]);
    let (y0, y1, y2) = (samples[i - 1], samples[i], samples[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature >= 0.0 {
        return Ok(x1);
    }
    // Newton form y = y0 + d01·(x - x0) + c·(x - x0)(x - x1)
    let vertex = 0.5 * (x0 + x1) - 0.5 * d01 / curvature;
    Ok(vertex.clamp(x0, x2))
}
