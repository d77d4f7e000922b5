//! Linear propagation: `E_out(Δ) = H(Δ)·E_in(Δ)` applied bin by bin.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::medium::{EitMedium, MeasuredTransmission};
use crate::signal::Waveform;
use crate::spectral::{dft, idft, Spectrum};

/// Fraction of the window, at each end, policed for circular wrap-around.
pub const EDGE_FRACTION: f64 = 0.05;
/// Output energy share in the edge regions above which wrap-around is reported.
pub const EDGE_ENERGY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeSource {
    Analytic(EitMedium),
    /// Tabulated intensity transmission; the field filter is its square root.
    Measured(MeasuredTransmission),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    Analytic(EitMedium),
    /// Linear phase 2πΔτ: a pure delay of `τ` seconds.
    Delay(f64),
    /// Amplitude-only filtering.
    None,
}

/// A linear channel assembled from an amplitude and a phase source.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub amplitude: AmplitudeSource,
    pub phase: PhaseSource,
}

impl Channel {
    pub fn analytic(medium: EitMedium) -> Self {
        Self { amplitude: AmplitudeSource::Analytic(medium), phase: PhaseSource::Analytic(medium) }
    }

    /// Measured amplitude with the model's phase.
    pub fn hybrid(measured: MeasuredTransmission, medium: EitMedium) -> Self {
        Self { amplitude: AmplitudeSource::Measured(measured), phase: PhaseSource::Analytic(medium) }
    }

    pub fn amplitude_only(amplitude: AmplitudeSource) -> Self {
        Self { amplitude, phase: PhaseSource::None }
    }

    /// Lossless delay line.
    pub fn pure_delay(seconds: f64) -> Self {
        Self { amplitude: AmplitudeSource::Analytic(EitMedium::identity()), phase: PhaseSource::Delay(seconds) }
    }

    /// The analytic medium behind this channel, if any.
    pub fn medium(&self) -> Option<&EitMedium> {
        match (&self.amplitude, &self.phase) {
            (AmplitudeSource::Analytic(m), _) | (_, PhaseSource::Analytic(m)) => Some(m),
            _ => None,
        }
    }

    pub fn measured(&self) -> Option<&MeasuredTransmission> {
        match &self.amplitude {
            AmplitudeSource::Measured(t) => Some(t),
            AmplitudeSource::Analytic(_) => None,
        }
    }

    /// Intensity transmission |H(Δ)|².
    pub fn transmission(&self, delta: f64) -> f64 {
        match &self.amplitude {
            AmplitudeSource::Analytic(m) => m.transmission(delta),
            AmplitudeSource::Measured(t) => t.lookup(delta),
        }
    }

    pub fn amplitude(&self, delta: f64) -> f64 {
        match &self.amplitude {
            AmplitudeSource::Analytic(m) => m.amplitude_response(delta),
            AmplitudeSource::Measured(t) => t.lookup(delta).sqrt(),
        }
    }

    pub fn phase(&self, delta: f64) -> f64 {
        match &self.phase {
            PhaseSource::Analytic(m) => m.phase_response(delta),
            PhaseSource::Delay(tau) => 2.0 * PI * delta * tau,
            PhaseSource::None => 0.0,
        }
    }

    /// H(Δ) = A(Δ)·exp(-iΦ(Δ)).
    pub fn response(&self, delta: f64) -> Complex64 {
        if let (AmplitudeSource::Analytic(a), PhaseSource::Analytic(p)) = (&self.amplitude, &self.phase) {
            if a == p {
                return a.transfer_function(delta);
            }
        }
        Complex64::from_polar(self.amplitude(delta), -self.phase(delta))
    }
}

pub fn propagate_spectrum(s_in: &Spectrum, channel: &Channel) -> Spectrum {
    s_in.map_bins(|d, e| channel.response(d) * e)
}

/// dft → channel → idft. Logs a warning when the output leaks into the
/// window edges, where circular wrap-around corrupts the result.
pub fn propagate_waveform(w: &Waveform, channel: &Channel) -> Waveform {
    let out = idft(&propagate_spectrum(&dft(w), channel));
    if let Some(share) = wrap_risk(&out) {
        log::warn!(
            "{:.3e} of the output energy lies in the outer {:.0}% of the window; circular wrap-around likely",
            share,
            EDGE_FRACTION * 100.0
        );
    }
    out
}

/// Share of energy in the outer [`EDGE_FRACTION`] of the window at either end.
pub fn edge_energy_fraction(w: &Waveform) -> f64 {
    let n = w.samples().len();
    let edge = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
    let power: Vec<f64> = w.samples().iter().map(|s| s.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = power[..edge].iter().chain(&power[n - edge..]).sum();
    outer / total
}

/// `Some(share)` when [`edge_energy_fraction`] exceeds [`EDGE_ENERGY_LIMIT`].
pub fn wrap_risk(w: &Waveform) -> Option<f64> {
    let share = edge_energy_fraction(w);
    (share > EDGE_ENERGY_LIMIT).then_some(share)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::calibrate_from_transmission;
    use crate::signal::{intensity_of, PulseSpec, SamplingGrid};
    use crate::spectral::{intensity_spectrum, peak_location};

    const T0: f64 = 6.5e-6;

    fn gaussian() -> (SamplingGrid, Waveform) {
        let p = PulseSpec::gaussian(T0, 0.0).unwrap();
        let g = SamplingGrid::for_pulse(&p);
        (g, p.synthesize(&g).unwrap())
    }

    fn peak_time(w: &Waveform) -> f64 {
        let times: Vec<f64> = w.grid().times().collect();
        peak_location(&times, intensity_of(w).samples()).unwrap()
    }

    #[test]
    fn identity_channel_is_exact() {
        let (_, w) = gaussian();
        let s = dft(&w);
        let ch = Channel::analytic(EitMedium::new(268.2e3, 0.0, 1.0).unwrap());
        assert_eq!(propagate_spectrum(&s, &ch), s);
        let out = propagate_waveform(&w, &ch);
        for (a, b) in w.samples().iter().zip(out.samples()) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn analytic_channel_scales_intensity_spectrum_exactly() {
        let (_, w) = gaussian();
        let m = calibrate_from_transmission(0.615, 0.10, 350e3).unwrap();
        let s = dft(&w);
        let out = propagate_spectrum(&s, &Channel::analytic(m));
        let (i_in, i_out) = (intensity_spectrum(&s), intensity_spectrum(&out));
        for ((d, a), b) in s.detunings().iter().zip(&i_in).zip(&i_out) {
            let expected = m.transmission(*d) * a;
            assert!((b - expected).abs() <= 1e-12 * expected.max(1e-300), "{d}");
        }
    }

    #[test]
    fn amplitude_only_channel_does_not_delay() {
        let (g, w) = gaussian();
        let m = calibrate_from_transmission(0.615, 0.10, 350e3).unwrap();
        let out = propagate_waveform(&w, &Channel::amplitude_only(AmplitudeSource::Analytic(m)));
        assert!(peak_time(&out).abs() < g.dt() / 100.0);
        let i = intensity_of(&out);
        let c = g.n() / 2;
        for k in 1..c {
            let (a, b) = (i.samples()[c + k], i.samples()[c - k]);
            assert!((a - b).abs() <= 1e-12 * i.samples()[c]);
        }
    }

    #[test]
    fn pure_delay_shifts_peak() {
        let (g, w) = gaussian();
        let out = propagate_waveform(&w, &Channel::pure_delay(0.5e-6));
        assert!((peak_time(&out) - 0.5e-6).abs() <= g.dt() / 10.0);
    }

    #[test]
    fn measured_channel_uses_square_root_of_transmission() {
        let m = calibrate_from_transmission(0.615, 0.10, 350e3).unwrap();
        let detunings: Vec<f64> = (-200..=200).map(|k| k as f64 * 10e3).collect();
        let table = MeasuredTransmission::from_medium(&m, &detunings).unwrap();
        let ch = Channel::hybrid(table, m);
        for d in [0.0, 120e3, -350e3] {
            let h = ch.response(d);
            let exact = m.transfer_function(d);
            assert!((h.norm_sqr() - exact.norm_sqr()).abs() < 1e-12);
            assert!((h.arg() - exact.arg()).abs() < 1e-12);
        }
        assert_eq!(ch.transmission(1e9), m.background());
    }

    #[test]
    fn wrap_guard_flags_edge_energy() {
        let g = SamplingGrid::new(64, 1.0, 0.0).unwrap();
        let mut v = vec![0.0; 64];
        v[32] = 1.0;
        let centered = Waveform::from_real(g, &v).unwrap();
        assert_eq!(wrap_risk(&centered), None);
        v[1] = 0.1;
        let leaky = Waveform::from_real(g, &v).unwrap();
        assert!(wrap_risk(&leaky).is_some());
    }
}
