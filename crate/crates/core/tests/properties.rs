use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use slowlight::analysis::{
    compensate_intensity_spectrum, transmission_profile, CompensationConfig, TransmissionSource,
};
use slowlight::medium::{calibrate_from_transmission, EitMedium, MeasuredTransmission};
use slowlight::propagation::{propagate_spectrum, propagate_waveform, Channel};
use slowlight::signal::{SamplingGrid, Waveform};
use slowlight::spectral::{band_extract, dft, idft, intensity_spectrum, AmgBands};

fn medium() -> impl Strategy<Value = EitMedium> {
    (1e3..1e7f64, 0.0..5.0f64, 0.05..=1.0f64).prop_map(|(g, z, c)| EitMedium::new(g, z, c).unwrap())
}

fn waveform(n: usize) -> impl Strategy<Value = Waveform> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n).prop_map(move |v| {
        let grid = SamplingGrid::new(n, 1e-7, -3e-6).unwrap();
        Waveform::new(grid, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap()
    })
}

fn real_waveform(n: usize) -> impl Strategy<Value = Waveform> {
    prop::collection::vec(0.0..1.0f64, n).prop_map(move |v| {
        let grid = SamplingGrid::new(n, 1e-7, -3e-6).unwrap();
        Waveform::from_real(grid, &v).unwrap()
    })
}

fn close(a: Complex64, b: Complex64, rel: f64, scale: f64) -> bool {
    (a - b).norm() <= rel * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn compact_and_expanded_transfer_agree(
        delta in -1e8..1e8f64,
        gamma in 1e2..1e7f64,
        z in 0.0..10.0f64,
    ) {
        let m = EitMedium::new(gamma, z, 1.0).unwrap();
        let compact = (Complex64::new(-delta * z, 0.0) / Complex64::new(delta, -gamma)).exp();
        let d2 = delta * delta;
        let g2 = gamma * gamma;
        let expanded = Complex64::from_polar((-d2 * z / (d2 + g2)).exp(), -delta * z * gamma / (d2 + g2));
        prop_assert!(close(compact, expanded, 1e-12, compact.norm()), "{compact} vs {expanded}");
        prop_assert!(close(m.transfer_function(delta), expanded, 1e-12, expanded.norm()));
        let polar = Complex64::from_polar(m.amplitude_response(delta), -m.phase_response(delta));
        prop_assert!(close(m.transfer_function(delta), polar, 1e-12, polar.norm()));
    }
}

proptest! {
    #[test]
    fn amplitude_even_phase_odd_and_loss_monotone(m in medium(), a in 0.0..1e8f64, b in 0.0..1e8f64) {
        prop_assert_eq!(m.amplitude_response(a), m.amplitude_response(-a));
        prop_assert_eq!(m.phase_response(a), -m.phase_response(-a));
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.amplitude_response(far) <= m.amplitude_response(near));
        let amp = m.amplitude_response(a);
        prop_assert!(amp > 0.0 && amp <= 1.0);
    }

    #[test]
    fn group_delay_matches_finite_difference(m in medium(), frac in -10.0..10.0f64) {
        let g = m.gamma_eit();
        let delta = frac * g;
        let h = g * 1e-6;
        let fd = (m.phase_response(delta + h) - m.phase_response(delta - h)) / (2.0 * h) / (2.0 * PI);
        let tau = m.group_delay(delta);
        // relative to the resonant delay, so zero crossings at |Δ| = Γ stay well posed
        let scale = m.group_delay(0.0).abs().max(f64::MIN_POSITIVE);
        prop_assert!((tau - fd).abs() <= 1e-6 * tau.abs().max(1e-3 * scale), "{tau} vs {fd}");
        prop_assert_eq!(tau.signum() == 1.0, frac.abs() < 1.0 || m.z() == 0.0);
    }

    #[test]
    fn calibration_inverts_window_measurement(
        gamma in 1e3..1e7f64,
        z in 0.05..4.0f64,
        scale in 0.05..=1.0f64,
    ) {
        let m = EitMedium::new(gamma, z, scale).unwrap();
        let peak = m.transmission(0.0);
        let background = m.background();
        // independent half-point search on the model curve
        let half = 0.5 * (peak + background);
        let (mut lo, mut hi) = (0.0, gamma * 1e4);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if m.transmission(mid) > half { lo = mid } else { hi = mid }
        }
        let fwhm = lo + hi;
        let back = calibrate_from_transmission(peak, background, fwhm).unwrap();
        prop_assert!((back.gamma_eit() - gamma).abs() <= 1e-6 * gamma);
        prop_assert!((back.z() - z).abs() <= 1e-6 * z);
        prop_assert!((back.scale() - scale).abs() <= 1e-6 * scale);
    }

    #[test]
    fn lookup_stays_within_bracketing_values(
        values in prop::collection::vec(0.0..=1.0f64, 4..20),
        q in -2.0..25.0f64,
    ) {
        let points: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        let t = MeasuredTransmission::new(points, 0.1).unwrap();
        let v = t.lookup(q);
        if q < 0.0 || q > (values.len() - 1) as f64 {
            prop_assert_eq!(v, 0.1);
        } else {
            let i = (q.floor() as usize).min(values.len() - 2);
            let (a, b) = (values[i], values[i + 1]);
            prop_assert!(v >= a.min(b) - 1e-15 && v <= a.max(b) + 1e-15);
        }
    }

    #[test]
    fn parseval_and_round_trip(w in waveform(256)) {
        let s = dft(&w);
        let (et, ef) = (w.energy(), s.energy());
        prop_assert!((et - ef).abs() <= 1e-12 * et);
        let back = idft(&s);
        let peak = w.samples().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in w.samples().iter().zip(back.samples()) {
            prop_assert!((a - b).norm() <= 1e-12 * peak);
        }
    }

    #[test]
    fn dft_is_linear(w1 in waveform(128), w2 in waveform(128), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let grid = *w1.grid();
        let combo: Vec<Complex64> = w1.samples().iter().zip(w2.samples()).map(|(x, y)| x * a + y * b).collect();
        let lhs = dft(&Waveform::new(grid, combo).unwrap());
        let (s1, s2) = (dft(&w1), dft(&w2));
        let scale = lhs.samples().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for ((l, x), y) in lhs.samples().iter().zip(s1.samples()).zip(s2.samples()) {
            prop_assert!((l - (x * a + y * b)).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn real_waveforms_have_hermitian_spectra(w in real_waveform(256)) {
        let s = dft(&w);
        let n = s.samples().len();
        let c = n / 2;
        let scale = s.samples().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for k in 1..c {
            let (pos, neg) = (s.samples()[c + k], s.samples()[c - k]);
            prop_assert!((neg - pos.conj()).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn band_partition_is_exact(w in waveform(256), mod_bins in 5usize..40) {
        let s = dft(&w);
        let mod_freq = mod_bins as f64 * s.grid().df();
        let bands = AmgBands::canonical(mod_freq);
        let parts: Vec<_> = [bands.carrier, bands.left, bands.right]
            .iter()
            .map(|&(lo, hi)| band_extract(&s, lo, hi))
            .collect();
        let in_band = |d: f64| [bands.carrier, bands.left, bands.right].iter().any(|&(lo, hi)| d >= lo && d < hi);
        let remainder = s.map_bins(|d, e| if in_band(d) { Complex64::new(0.0, 0.0) } else { e });
        for j in 0..s.samples().len() {
            let sum = parts.iter().map(|p| p.samples()[j]).sum::<Complex64>() + remainder.samples()[j];
            prop_assert_eq!(sum, s.samples()[j]);
        }
    }

    #[test]
    fn propagation_never_adds_energy(w in waveform(256), m in medium()) {
        let out = propagate_waveform(&w, &Channel::analytic(m));
        prop_assert!(out.energy() <= w.energy() * (1.0 + 1e-12));
    }

    #[test]
    fn propagation_is_linear(
        w1 in waveform(128),
        w2 in waveform(128),
        m in medium(),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let ch = Channel::analytic(m);
        let grid = *w1.grid();
        let combo: Vec<Complex64> = w1.samples().iter().zip(w2.samples()).map(|(x, y)| x * a + y * b).collect();
        let lhs = propagate_waveform(&Waveform::new(grid, combo).unwrap(), &ch);
        let (p1, p2) = (propagate_waveform(&w1, &ch), propagate_waveform(&w2, &ch));
        let scale = lhs.samples().iter().map(|c| c.norm()).fold(1e-300, f64::max);
        for ((l, x), y) in lhs.samples().iter().zip(p1.samples()).zip(p2.samples()) {
            prop_assert!((l - (x * a + y * b)).norm() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn exact_model_compensation_round_trip(w in waveform(256), m in medium()) {
        let ch = Channel::analytic(m);
        let s_in = dft(&w);
        let s_out = propagate_spectrum(&s_in, &ch);
        let t = transmission_profile(&ch, TransmissionSource::Model, s_in.grid()).unwrap();
        let min = t.iter().cloned().fold(1.0, f64::min);
        let cfg = CompensationConfig::new(0.5 * min, TransmissionSource::Model).unwrap();
        let comp = compensate_intensity_spectrum(&intensity_spectrum(&s_out), &t, &cfg);
        for (c, i) in comp.iter().zip(intensity_spectrum(&s_in)) {
            prop_assert!((c - i).abs() <= 1e-9 * i.max(1e-300), "{c} vs {i}");
        }
    }
}
