//! Analytic EIT channel.
//!
//! The medium is a linear filter with complex frequency response
//!
//! ```text
//! H(Δ) = √c · exp[-Δ·Z / (Δ - iΓ)] = A(Δ) · exp[-iΦ(Δ)]
//! A(Δ) = √c · exp[-Δ²Z / (Δ² + Γ²)]
//! Φ(Δ) = ΔZΓ / (Δ² + Γ²)
//! ```
//!
//! where Δ is the probe detuning and Γ the EIT half-linewidth, both ordinary
//! frequencies in Hz, Z the normalized propagation length and c the peak
//! intensity transmission. Far from resonance the intensity transmission
//! settles to `c·e^(-2Z)`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::csvio;
use crate::error::{Error, Result};

/// Calibrated EIT channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EitMedium {
    gamma_eit: f64,
    z: f64,
    scale: f64,
    omega_rabi: Option<f64>,
    gamma_ground: Option<f64>,
}

impl EitMedium {
    /// `gamma_eit` in Hz, `z` dimensionless, `scale` the peak intensity transmission.
    pub fn new(gamma_eit: f64, z: f64, scale: f64) -> Result<Self> {
        if !(gamma_eit.is_finite() && gamma_eit > 0.0) {
            return Err(Error::invalid("gamma_eit", format!("must be > 0, got {gamma_eit}")));
        }
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::invalid("z", format!("must be >= 0, got {z}")));
        }
        if !(scale.is_finite() && scale > 0.0 && scale <= 1.0) {
            return Err(Error::invalid("scale", format!("must be in (0, 1], got {scale}")));
        }
        Ok(Self { gamma_eit, z, scale, omega_rabi: None, gamma_ground: None })
    }

    /// Builds the medium from the coupling Rabi amplitude |Ω| and ground-state
    /// decoherence rate γ (both Hz), with Γ = |Ω|²/γ.
    pub fn from_coupling(omega_rabi: f64, gamma_ground: f64, z: f64, scale: f64) -> Result<Self> {
        if !(omega_rabi.is_finite() && omega_rabi > 0.0) {
            return Err(Error::invalid("omega_rabi", format!("must be > 0, got {omega_rabi}")));
        }
        if !(gamma_ground.is_finite() && gamma_ground > 0.0) {
            return Err(Error::invalid("gamma_ground", format!("must be > 0, got {gamma_ground}")));
        }
        let mut m = Self::new(omega_rabi * omega_rabi / gamma_ground, z, scale)?;
        m.omega_rabi = Some(omega_rabi);
        m.gamma_ground = Some(gamma_ground);
        Ok(m)
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0).unwrap()
    }

    pub fn gamma_eit(&self) -> f64 {
        self.gamma_eit
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn omega_rabi(&self) -> Option<f64> {
        self.omega_rabi
    }

    pub fn gamma_ground(&self) -> Option<f64> {
        self.gamma_ground
    }

    /// Fraction Δ²/(Δ²+Γ²) of the full optical depth seen at `delta`.
    fn depth_fraction(&self, delta: f64) -> f64 {
        let d2 = delta * delta;
        d2 / (d2 + self.gamma_eit * self.gamma_eit)
    }

    /// Complex field transfer H(Δ).
    pub fn transfer_function(&self, delta: f64) -> Complex64 {
        let denom = Complex64::new(delta, -self.gamma_eit);
        let exponent = Complex64::new(-delta * self.z, 0.0) / denom;
        exponent.exp() * self.scale.sqrt()
    }

    /// Field amplitude transmission A(Δ).
    pub fn amplitude_response(&self, delta: f64) -> f64 {
        self.scale.sqrt() * (-self.z * self.depth_fraction(delta)).exp()
    }

    /// Phase Φ(Δ) in radians; H = A·e^(-iΦ).
    pub fn phase_response(&self, delta: f64) -> f64 {
        let g = self.gamma_eit;
        delta * self.z * g / (delta * delta + g * g)
    }

    /// Intensity transmission |A(Δ)|².
    pub fn transmission(&self, delta: f64) -> f64 {
        self.scale * (-2.0 * self.z * self.depth_fraction(delta)).exp()
    }

    /// Envelope delay in seconds of a narrowband component centered at
    /// `delta`, (1/2π)·dΦ/dΔ. Negative values are advancement.
    pub fn group_delay(&self, delta: f64) -> f64 {
        let g2 = self.gamma_eit * self.gamma_eit;
        let d2 = delta * delta;
        let s = d2 + g2;
        self.z * self.gamma_eit * (g2 - d2) / (s * s) / (2.0 * PI)
    }

    /// Far-detuned intensity transmission `c·e^(-2Z)`.
    pub fn background(&self) -> f64 {
        self.scale * (-2.0 * self.z).exp()
    }
}

/// Fits (Γ, Z, c) to the three numbers read off a transmission window: peak
/// transmission, far-detuned background, and the full width between the
/// points at (peak + background)/2. `fwhm` is in Hz.
pub fn calibrate_from_transmission(peak: f64, background: f64, fwhm: f64) -> Result<EitMedium> {
    if !(peak.is_finite() && peak > 0.0 && peak <= 1.0) {
        return Err(Error::invalid("peak", format!("must be in (0, 1], got {peak}")));
    }
    if !(background.is_finite() && background > 0.0) {
        return Err(Error::invalid("background", format!("must be > 0, got {background}")));
    }
    if background >= peak {
        return Err(Error::invalid(
            "background",
            format!("must be below peak ({background} >= {peak}): no transparency window"),
        ));
    }
    if !(fwhm.is_finite() && fwhm > 0.0) {
        return Err(Error::invalid("fwhm", format!("must be > 0, got {fwhm}")));
    }

    let z = 0.5 * (peak / background).ln();
    let target = 0.5 * (1.0 + (-2.0 * z).exp());
    // exp(-2Zx) is decreasing in x: positive residual at 0, negative at 1.
    let residual = |x: f64| (-2.0 * z * x).exp() - target;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let gamma = 0.5 * fwhm * ((1.0 - x) / x).sqrt();
    EitMedium::new(gamma, z, peak)
}

/// Tabulated intensity transmission |A(Δ)|², linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredTransmission {
    points: Vec<(f64, f64)>,
    extrapolation_value: f64,
}

impl MeasuredTransmission {
    pub const HEADER: [&'static str; 2] = ["detuning_hz", "transmission"];

    pub fn new(points: Vec<(f64, f64)>, extrapolation_value: f64) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::invalid("transmission", format!("need at least 4 points, got {}", points.len())));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid(
                    "transmission",
                    format!("detunings must be strictly increasing (point {})", i + 1),
                ));
            }
        }
        if let Some((d, t)) = points.iter().find(|(d, t)| !d.is_finite() || !(0.0..=1.0).contains(t)) {
            return Err(Error::invalid("transmission", format!("value {t} at {d} Hz is outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&extrapolation_value) {
            return Err(Error::invalid("extrapolation_value", format!("must be in [0, 1], got {extrapolation_value}")));
        }
        Ok(Self { points, extrapolation_value })
    }

    /// Samples a medium's model transmission at the given detunings.
    pub fn from_medium(medium: &EitMedium, detunings: &[f64]) -> Result<Self> {
        let points = detunings.iter().map(|&d| (d, medium.transmission(d))).collect();
        Self::new(points, medium.background())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn extrapolation_value(&self) -> f64 {
        self.extrapolation_value
    }

    pub fn lookup(&self, delta: f64) -> f64 {
        let pts = &self.points;
        let (first, last) = (pts[0].0, pts[pts.len() - 1].0);
        let value = if delta < first || delta > last || delta.is_nan() {
            self.extrapolation_value
        } else {
            // index of first point with detuning > delta
            let hi = pts.partition_point(|&(d, _)| d <= delta);
            if hi == 0 {
                pts[0].1
            } else if hi == pts.len() {
                pts[hi - 1].1
            } else {
                let (d0, t0) = pts[hi - 1];
                let (d1, t1) = pts[hi];
                t0 + (t1 - t0) * (delta - d0) / (d1 - d0)
            }
        };
        value.clamp(0.0, 1.0)
    }

    /// Loads a `detuning_hz,transmission` CSV.
    pub fn load(path: &Path, extrapolation_value: f64) -> Result<Self> {
        let table = csvio::read_table(path)?;
        table.expect_header(&Self::HEADER, path)?;
        let points: Vec<(f64, f64)> = table.rows.iter().map(|r| (r[0], r[1])).collect();
        if let Some(i) = points.windows(2).position(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: Some(table.lines[i + 1]),
                message: "detunings must be strictly increasing".into(),
            });
        }
        Self::new(points, extrapolation_value).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: None,
            message: e.to_string(),
        })
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = self.points.iter().map(|&(d, t)| [d, t]).collect();
        csvio::format_table(&Self::HEADER, rows.iter().map(|r| r.as_slice()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
