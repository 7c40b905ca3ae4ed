use bandpulse::band::BandSpec;
use bandpulse::linalg::symmetric_eigen;
use bandpulse::pulse::{
    band_moments, legendre_waveform, moment_matrix, optimal_wave_comb, optimize_pulse, r_vs_n_curve,
    resolving_power, shift_band, sinc_cosine_pulse, sinc_cosine_resolving_power, sinc_cosine_waveform,
    parity_of, synthesize_time, teeth_resolving_power, LegendrePulse, MomentPower, Parity,
};
use bandpulse::spectral::padded_power_spectrum;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

#[test]
fn optimal_figures() {
    let r12 = optimize_pulse::<f64>(12, MomentPower::Second).unwrap().figure;
    assert!((r12 - 0.92).abs() < 0.02, "R(12) = {r12}");
    assert_eq!(optimize_pulse::<f64>(1, MomentPower::Second).unwrap().figure, 0.0);
    let r2 = optimize_pulse::<f64>(2, MomentPower::Second).unwrap().figure;
    assert!((r2 - 16.0 / 225.0).abs() < 1e-14);
}

#[test]
fn optimized_pulse_is_normalized() {
    for n in [2, 5, 12, 25] {
        for p in [MomentPower::First, MomentPower::Second] {
            let o = optimize_pulse::<f64>(n, p).unwrap();
            let norm: f64 = o.pulse.coeffs().iter().map(|c| c.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn eigen_invariants() {
    for n in [3, 12, 40] {
        let m = moment_matrix::<f64>(n, MomentPower::Second).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert!(e.values.windows(2).all(|p| p[0] <= p[1]));
        assert!(e.orthonormality_error() < 1e-10);
        for k in 0..n {
            assert!(e.residual(&m, k) < 1e-10);
        }
    }
}

#[test]
fn moment_matrix_band_structure() {
    let m2 = moment_matrix::<f64>(15, MomentPower::Second).unwrap();
    let m1 = moment_matrix::<f64>(15, MomentPower::First).unwrap();
    for i in 0..15_usize {
        for j in 0..15 {
            let d = i.abs_diff(j);
            if d != 0 && d != 2 {
                assert_eq!(m2[(i, j)], 0.0);
            }
            if d != 1 {
                assert_eq!(m1[(i, j)], 0.0);
            }
            // Even and odd indices never couple.
            if (i + j) % 2 == 1 {
                assert_eq!(m2[(i, j)], 0.0);
            }
        }
    }
    assert!(moment_matrix::<f64>(0, MomentPower::Second).is_err());
}

#[test]
fn curve_against_dimension() {
    let curve = r_vs_n_curve::<f64>(40).unwrap();
    assert_eq!(curve.first().unwrap().0, 2);
    for w in curve.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-10);
    }
    assert!(curve.iter().all(|&(_, r)| (0.0..=1.0 + 1e-6).contains(&r)));
    let r12 = curve.iter().find(|p| p.0 == 12).unwrap().1;
    assert!((r12 - 0.92).abs() < 0.02);
    assert!(r_vs_n_curve::<f64>(1).is_err());
}

#[test]
fn flat_spectrum_pulse_is_scaled_sinc() {
    let p = LegendrePulse::<f64>::from_real(&[1.0]).unwrap();
    let w = synthesize_time(&p, -40.0, 0.25, 321).unwrap();
    for (t, s) in w.times().zip(w.samples()) {
        let sinc = if t == 0.0 { 1.0 } else { t.sin() / t };
        assert!((s.re - sinc / PI.sqrt()).abs() < 1e-13);
        assert_eq!(s.im, 0.0);
    }
}

#[test]
fn even_coefficients_give_real_waveform() {
    let p = LegendrePulse::<f64>::normalizing(
        [0.6, 0.0, -0.3, 0.0, 0.2].iter().map(|&x| num_complex::Complex::new(x, 0.0)).collect(),
    )
    .unwrap();
    let w = synthesize_time(&p, -30.0, 0.3, 201).unwrap();
    assert!(w.imaginary_residue() < 1e-12);
}

#[test]
fn synthesized_power_is_one() {
    let o = optimize_pulse::<f64>(12, MomentPower::Second).unwrap();
    let (t0, dt, n) = bandpulse::pulse::legendre_pulse_grid(&o.pulse, 1e-5);
    let raw = synthesize_time(&o.pulse, t0, dt, n).unwrap();
    assert!((raw.power() - 1.0).abs() < 1e-4, "power {}", raw.power());
}

#[test]
fn sinc_cosine_examples() {
    let k0 = 2.0;
    let s0 = bandpulse::pulse::sinc_cosine_value(50.0, k0, 0.0);
    assert!((s0 - (k0 / PI).sqrt() * (1.0 + FRAC_1_SQRT_2)).abs() < 1e-15);
    assert!(sinc_cosine_pulse(1.0, 1.0, 0.0, 0.1, 10).is_err());

    let w = sinc_cosine_waveform(50.0_f64, 1.0, 1e-4).unwrap();
    let band = BandSpec::symmetric(1.0).unwrap();
    let r = resolving_power(&w, &band).unwrap();
    assert!((r.r - 0.92).abs() < 0.02, "R = {}", r.r);
    assert!((r.r - sinc_cosine_resolving_power(50.0).unwrap()).abs() < 1e-5);
    assert!(!r.leakage_warning);

    // The spectrum stays inside [-k0, k0].
    let (k, p) = padded_power_spectrum(&w, 4);
    let peak = p.iter().cloned().fold(0.0, f64::max);
    let outside = k
        .iter()
        .zip(&p)
        .filter(|(k, _)| k.abs() > 1.0 + 0.02)
        .map(|(_, &p)| p)
        .fold(0.0, f64::max);
    assert!(outside < 1e-3 * peak, "{outside} vs {peak}");
}

#[test]
fn sinc_cosine_analytic_curve() {
    let r50 = sinc_cosine_resolving_power(50.0_f64).unwrap();
    assert!((r50 - 0.92).abs() < 0.02);
    let mut last = 0.0;
    for d in [2.0, 5.0, 10.0, 50.0, 200.0, 1000.0] {
        let r = sinc_cosine_resolving_power(d).unwrap();
        assert!(r > last && r < 1.0);
        last = r;
    }
}

#[test]
fn resolving_power_of_point_spectra() {
    let comb = teeth_resolving_power(&[(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]);
    assert!((comb - 1.0_f64).abs() < 1e-15);
    assert_eq!(teeth_resolving_power(&[(1.0_f64, 1.0)]), 0.0);
}

#[test]
fn resolving_power_rejects_bad_input() {
    let w = sinc_cosine_waveform(10.0, 1.0, 1e-3).unwrap();
    assert!(resolving_power(&w.scaled(2.0), &BandSpec::unit()).is_err());
    assert!(resolving_power(&w, &BandSpec::new(0.5, 1.0).unwrap()).is_err());
}

#[test]
fn comb_examples() {
    let c = optimal_wave_comb(&BandSpec::symmetric(1.0_f64).unwrap());
    assert_eq!(c.max_variance, 0.25);
    let amps: Vec<(f64, f64)> = c.teeth.iter().map(|t| (t.k, t.amplitude)).collect();
    assert_eq!(amps, vec![(-1.0, 0.5), (0.0, FRAC_1_SQRT_2), (1.0, 0.5)]);

    let (k1, k2) = (10.0 / TAU, 50.0 / TAU);
    let c = optimal_wave_comb(&BandSpec::new(k1, k2).unwrap());
    let (dk, kbar) = (40.0 / TAU, 30.0 / TAU);
    assert!((c.max_variance - dk * dk * kbar * kbar).abs() < 1e-12 * c.max_variance);
    assert_eq!(c.teeth.len(), 2);
}

#[test]
fn shift_to_unit_band_is_identity() {
    let w = sinc_cosine_waveform(5.0, 1.0, 1e-3).unwrap();
    assert_eq!(shift_band(&w, &BandSpec::unit()).unwrap(), w);
}

#[test]
fn shifted_first_moment_pulse() {
    let o = optimize_pulse::<f64>(12, MomentPower::First).unwrap();
    assert!((o.figure - 0.97).abs() < 0.01, "<u^2> = {}", o.figure);
    let band = BandSpec::new(10.0 / TAU, 50.0 / TAU).unwrap();
    let g = shift_band(&legendre_waveform(&o.pulse, 1e-3).unwrap(), &band)
        .unwrap()
        .normalized()
        .unwrap();
    let m = band_moments(&g, &band).unwrap();
    assert!(m.leakage < 0.01, "leakage {}", m.leakage);
    assert!((m.u2 - o.figure).abs() < 0.01);
}

/// `R` of a Legendre spectrum by direct quadrature of `|f(u)|^2 u^p`.
fn quadrature_r(p: &LegendrePulse<f64>) -> f64 {
    let rule = bandpulse::basis::gauss_legendre::<f64>(200).unwrap();
    let m = |k: i32| rule.integrate(|u| p.spectrum_at(u).unwrap().norm_sqr() * u.powi(k));
    let (m0, m2, m4) = (m(0), m(2), m(4));
    4.0 * (m4 / m0 - (m2 / m0).powi(2))
}

#[test]
fn time_domain_figure_matches_spectrum() {
    for n in [4, 8, 12] {
        let o = optimize_pulse::<f64>(n, MomentPower::Second).unwrap();
        let w = legendre_waveform(&o.pulse, 1e-4).unwrap();
        let r = resolving_power(&w, &BandSpec::unit()).unwrap();
        let exact = quadrature_r(&o.pulse);
        assert!(((r.r - exact) / exact).abs() < 0.02, "N {n}: {} vs {exact}", r.r);
        assert!(r.moments.leakage < 0.01);
        assert!(r.r <= 1.0 + 1e-6);
        // The eigenvalue figure only sees the first N moments of u^2 f.
        assert!(exact >= o.figure - 1e-12);
    }
}

#[test]
fn eigen_figure_within_two_percent_from_twelve_terms() {
    for n in [12, 16, 24] {
        let o = optimize_pulse::<f64>(n, MomentPower::Second).unwrap();
        let exact = quadrature_r(&o.pulse);
        assert!((exact - o.figure) / o.figure < 0.02, "N {n}: {exact} vs {}", o.figure);
    }
}

#[test]
fn extreme_eigenvectors_have_pure_parity() {
    for n in 2..=20 {
        let o = optimize_pulse::<f64>(n, MomentPower::Second).unwrap();
        assert_eq!(parity_of(&o.v_min, 1e-10), Parity::Even, "N {n}");
        assert_ne!(parity_of(&o.v_max, 1e-10), Parity::Mixed, "N {n}");
    }
}

#[test]
fn odd_dimension_pulse_is_real() {
    let o = optimize_pulse::<f64>(13, MomentPower::Second).unwrap();
    assert_eq!(o.pulse.parity(1e-10), Parity::Even);
    let w = synthesize_time(&o.pulse, -50.0, 0.25, 401).unwrap();
    assert!(w.imaginary_residue() < 1e-12);
}

#[test]
fn twelve_term_pulse_has_even_envelope() {
    let o = optimize_pulse::<f64>(12, MomentPower::Second).unwrap();
    let w = synthesize_time(&o.pulse, -50.0, 0.25, 401).unwrap();
    let s = w.samples();
    for k in 0..s.len() {
        let mirror = s[s.len() - 1 - k];
        assert!((s[k].norm() - mirror.norm()).abs() < 1e-12);
        assert!((s[k].re - mirror.re).abs() < 1e-12);
        assert!((s[k].im + mirror.im).abs() < 1e-12);
    }
}
