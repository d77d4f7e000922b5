//! Spectral compensation of absorptive distortion, component decomposition
//! and pulse metrics.
//!
//! Compensation divides the output spectrum by the channel transmission,
//! `I_comp(Δ) = I_out(Δ) / max(T(Δ), floor)`. It restores the input intensity
//! spectrum exactly for an analytic channel, but keeps the propagated phase,
//! so dispersive distortion survives recovery.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::csvio;
use crate::error::{Error, Result};
use crate::propagation::Channel;
use crate::signal::{intensity_of, SamplingGrid, Waveform};
use crate::spectral::{band_extract, dft, fwhm, idft, peak_location, AmgBands, Spectrum};

pub const DEFAULT_FLOOR: f64 = 1e-3;

/// Minimum share of spectral energy each sideband band must carry for a
/// spectrum to count as AMG.
pub const MIN_SIDEBAND_SHARE: f64 = 1e-6;

/// Where the divisor transmission comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransmissionSource {
    #[default]
    Model,
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationConfig {
    floor: f64,
    source: TransmissionSource,
}

impl Default for CompensationConfig {
    fn default() -> Self {
        Self { floor: DEFAULT_FLOOR, source: TransmissionSource::Model }
    }
}

impl CompensationConfig {
    pub fn new(floor: f64, source: TransmissionSource) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::invalid("floor", format!("must be in (0, 1), got {floor}")));
        }
        Ok(Self { floor, source })
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn source(&self) -> TransmissionSource {
        self.source
    }

    fn divisor(&self, transmission: f64) -> f64 {
        transmission.max(self.floor)
    }
}

/// Per-bin intensity transmission of `channel` on `grid`'s detuning lattice.
pub fn transmission_profile(channel: &Channel, source: TransmissionSource, grid: &SamplingGrid) -> Result<Vec<f64>> {
    match source {
        TransmissionSource::Model => {
            let m = channel
                .medium()
                .ok_or_else(|| Error::invalid("compensation.source", "model transmission needs an analytic medium"))?;
            Ok(grid.detunings().map(|d| m.transmission(d)).collect())
        }
        TransmissionSource::Measured => {
            let t = channel.measured().ok_or_else(|| {
                Error::invalid("compensation.source", "measured transmission needs a transmission file")
            })?;
            Ok(grid.detunings().map(|d| t.lookup(d)).collect())
        }
    }
}

/// `i_out / max(transmission, floor)` bin-wise.
///
/// Panics if the slices differ in length.
pub fn compensate_intensity_spectrum(i_out: &[f64], transmission: &[f64], cfg: &CompensationConfig) -> Vec<f64> {
    assert_eq!(i_out.len(), transmission.len(), "one transmission value per bin");
    i_out.iter().zip(transmission).map(|(&i, &t)| i / cfg.divisor(t)).collect()
}

/// Intensity gain an amplifier would need to undo the channel loss.
pub fn export_gain_spectrum(transmission: &[f64], cfg: &CompensationConfig) -> Vec<f64> {
    transmission.iter().map(|&t| 1.0 / cfg.divisor(t)).collect()
}

pub const GAIN_HEADER: [&str; 2] = ["detuning_hz", "intensity_gain"];

pub fn gain_spectrum_csv(grid: &SamplingGrid, gain: &[f64]) -> String {
    let rows: Vec<[f64; 2]> = grid.detunings().zip(gain).map(|(d, &g)| [d, g]).collect();
    csvio::format_table(&GAIN_HEADER, rows.iter().map(|r| r.as_slice()))
}

/// Field-level compensation: `E_out(Δ) / max(√T, √floor)`, phase kept.
pub fn recover_spectrum(s_out: &Spectrum, transmission: &[f64], cfg: &CompensationConfig) -> Spectrum {
    assert_eq!(s_out.samples().len(), transmission.len(), "one transmission value per bin");
    let mut t = transmission.iter();
    s_out.map_bins(|_, e| e / cfg.divisor(*t.next().unwrap()).sqrt())
}

pub fn recover_waveform(s_out: &Spectrum, transmission: &[f64], cfg: &CompensationConfig) -> Waveform {
    idft(&recover_spectrum(s_out, transmission, cfg))
}

/// Signed peak delays of the decomposed components, in seconds, relative to
/// the reference pulse. Negative is advancement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentDelays {
    pub carrier: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub carrier: Waveform,
    pub left: Waveform,
    pub right: Waveform,
    /// Carrier band of the input spectrum.
    pub reference: Waveform,
    pub delays: ComponentDelays,
}

pub fn decompose_components(s_out: &Spectrum, s_in: &Spectrum, mod_freq: f64) -> Result<Decomposition> {
    decompose_with_bands(s_out, s_in, &AmgBands::canonical(mod_freq))
}

pub fn decompose_with_bands(s_out: &Spectrum, s_in: &Spectrum, bands: &AmgBands) -> Result<Decomposition> {
    if s_out.grid() != s_in.grid() {
        return Err(Error::invalid("spectrum", "input and output spectra must share a grid"));
    }
    let extract = |s: &Spectrum, (lo, hi): (f64, f64)| band_extract(s, lo, hi);
    for (name, s) in [("output", s_out), ("input", s_in)] {
        let total = s.energy();
        for band in [bands.left, bands.right] {
            let share = if total > 0.0 { extract(s, band).energy() / total } else { 0.0 };
            if !(share >= MIN_SIDEBAND_SHARE) {
                return Err(Error::invalid(
                    "spectrum",
                    format!(
                        "{name} sideband band [{:e}, {:e}) Hz carries {share:.3e} of the energy; not an AMG pulse",
                        band.0, band.1
                    ),
                ));
            }
        }
    }

    let carrier = idft(&extract(s_out, bands.carrier));
    let left = idft(&extract(s_out, bands.left));
    let right = idft(&extract(s_out, bands.right));
    let reference = idft(&extract(s_in, bands.carrier));

    let reference_peak = peak_time(&reference)?;
    let delays = ComponentDelays {
        carrier: peak_time(&carrier)? - reference_peak,
        left: peak_time(&left)? - reference_peak,
        right: peak_time(&right)? - reference_peak,
    };
    Ok(Decomposition { carrier, left, right, reference, delays })
}

/// Peak position of |e(t)|².
pub fn peak_time(w: &Waveform) -> Result<f64> {
    let times: Vec<f64> = w.grid().times().collect();
    peak_location(&times, intensity_of(w).samples())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMetrics {
    /// Peak delay in seconds; negative is advancement.
    pub delay: f64,
    /// Fraction of input energy lost.
    pub loss: f64,
    /// RMS shape error after peak alignment, both curves scaled to unit peak.
    pub nrmse: f64,
    /// Intensity FWHM of the output, seconds.
    pub fwhm_time: f64,
}

/// Share of input energy trimmed from each tail when choosing the region
/// over which shape error is measured.
const SUPPORT_TAIL: f64 = 0.005;

pub fn measure_metrics(out: &Waveform, input: &Waveform) -> Result<PulseMetrics> {
    if out.grid() != input.grid() {
        return Err(Error::invalid("waveform", "output and input must share a grid"));
    }
    let grid = *input.grid();
    let times: Vec<f64> = grid.times().collect();
    let i_in = intensity_of(input);
    let i_out = intensity_of(out);
    let in_peak = peak_location(&times, i_in.samples())?;
    let delay = peak_location(&times, i_out.samples())? - in_peak;

    let e_in: f64 = i_in.samples().iter().sum();
    let e_out: f64 = i_out.samples().iter().sum();
    if e_in == 0.0 {
        return Err(Error::invalid("input", "input waveform carries no energy"));
    }
    let loss = 1.0 - e_out / e_in;

    let aligned = idft(&dft(out).map_bins(|d, e| e * Complex64::from_polar(1.0, 2.0 * PI * d * delay)));
    let aligned = intensity_of(&aligned);
    let norm = |v: &[f64]| {
        let max = v.iter().cloned().fold(0.0, f64::max);
        let max = if max > 0.0 { max } else { 1.0 };
        v.iter().map(|x| x / max).collect::<Vec<f64>>()
    };
    let a = norm(i_in.samples());
    let b = norm(aligned.samples());

    let mut cumulative = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for (k, &v) in i_in.samples().iter().enumerate() {
        let before = cumulative / e_in;
        cumulative += v;
        let after = cumulative / e_in;
        if after >= SUPPORT_TAIL && before <= 1.0 - SUPPORT_TAIL {
            sum_sq += (b[k] - a[k]).powi(2);
            count += 1;
        }
    }
    let nrmse = (sum_sq / count.max(1) as f64).sqrt();

    let fwhm_time = fwhm(&times, i_out.samples(), None)?;
    Ok(PulseMetrics { delay, loss, nrmse, fwhm_time })
}
