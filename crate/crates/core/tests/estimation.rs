use bandpulse::echo::{add_noise, add_noise_stream, composite_echo, two_reflector_echo, CableNetwork, ReflectorScene};
use bandpulse::estimation::{
    grid_search_rmse, mle_estimate, monte_carlo, EstimateWarning, Estimator, MleTemplate, MonteCarloConfig,
};
use bandpulse::fisher::NoiseSpec;
use bandpulse::pulse::{legendre_waveform, optimize_pulse, sinc_cosine_waveform, MomentPower};
use bandpulse::waveform::SampledWaveform;
use bandpulse::Error;
use num_complex::Complex;

fn optimal(tail: f64) -> SampledWaveform<f64> {
    let o = optimize_pulse::<f64>(12, MomentPower::Second).unwrap();
    legendre_waveform(&o.pulse, tail).unwrap()
}

#[test]
fn noiseless_round_trip() {
    for f in [optimal(1e-3), sinc_cosine_waveform(5.0, 1.0, 1e-4).unwrap()] {
        for (a, x0, l) in [(1.0, 0.0, 0.05), (0.7, 0.3, 0.02), (2.0, -0.1, 0.05)] {
            let s = two_reflector_echo(&f, &ReflectorScene::new(a, x0, l).unwrap(), false).unwrap();
            let r = mle_estimate(&s, &f, None).unwrap();
            assert!(((r.l_hat - l) / l).abs() < 0.005, "l {l}: {}", r.l_hat);
            assert!(((r.a_hat - a) / a).abs() < 1e-3);
            assert!((r.x0_hat - x0).abs() < 1e-6);
            assert!(!r.clamped);
        }
    }
}

#[test]
fn single_reflector_gives_zero_separation() {
    let f = optimal(1e-3);
    let s = f.scaled(1.5);
    let r = mle_estimate(&s, &f, None).unwrap();
    assert!(r.l_hat_squared.abs() < 1e-8);
    assert!((r.a_hat - 1.5).abs() < 1e-8);
}

#[test]
fn averaging_repetitions_converges() {
    let f = optimal(1e-2);
    let scene = ReflectorScene::new(1.0, 0.0, 0.3).unwrap();
    let clean = two_reflector_echo(&f, &scene, false).unwrap();
    let noise = NoiseSpec::for_waveform(1e-6, &f).unwrap();
    let template = MleTemplate::new(&f).unwrap().with_x0_window(-0.8, 0.8).unwrap();
    let exact = template.estimate(&clean, None).unwrap().l_hat;
    let mut errors = Vec::new();
    for m in [1, 16, 256] {
        let mut sum = vec![Complex::new(0.0, 0.0); f.len()];
        for j in 0..m {
            let y = add_noise_stream(&clean, &noise, 11, j);
            for (acc, s) in sum.iter_mut().zip(y.samples()) {
                *acc += *s / m as f64;
            }
        }
        let avg = SampledWaveform::new(f.t_start(), f.dt(), sum).unwrap();
        errors.push((template.estimate(&avg, None).unwrap().l_hat - exact).abs());
    }
    assert!(errors[2] < errors[0] && errors[2] < 0.02 * exact, "{errors:?}");
}

#[test]
fn rejects_pure_noise() {
    let f = optimal(1e-2);
    let noise = NoiseSpec::for_waveform(1.0, &f).unwrap();
    let zero = f.scaled(0.0);
    let y = add_noise(&zero, &noise, 5);
    assert!(matches!(mle_estimate(&y, &f, Some(&noise)), Err(Error::NoSignal { .. })));
}

#[test]
fn degenerate_template() {
    let dt = std::f64::consts::PI / 8.0;
    let tone = SampledWaveform::from_fn(0.0, dt, 1600, |t| Complex::new(t.sin(), 0.0))
        .unwrap()
        .normalized()
        .unwrap();
    assert!(matches!(MleTemplate::new(&tone), Err(Error::DegeneratePulse { .. })));
    assert!(MleTemplate::new(&tone.scaled(2.0)).is_err());
}

#[test]
fn grid_round_trip() {
    let s = optimal(1e-3);
    for (c0, c1, d) in [(0.5, 0.5, 0.1), (0.6, 0.3, 0.25), (0.5, 0.45, 0.05)] {
        let y = composite_echo(&s, c0, c1, d).unwrap();
        let r = grid_search_rmse(&y, &s, (0.0, 3.0 * d), 201).unwrap();
        assert!(((r.l_hat - d) / d).abs() < 1e-3, "{d}: {}", r.l_hat);
        assert!((r.c0_hat.unwrap() - c0).abs() < 1e-3);
        assert!((r.c1_hat.unwrap() - c1).abs() < 1e-3);
        assert!((r.a_hat - (c0 + c1)).abs() < 1e-3);
        assert!((r.x0_hat + r.l_hat / 2.0).abs() < 1e-15);
        assert!(r.objective < 1e-4);
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }
}

#[test]
fn grid_single_reflector() {
    let s = optimal(1e-2);
    let y = s.scaled(0.8);
    let r = grid_search_rmse(&y, &s, (0.05, 1.0), 51).unwrap();
    assert!(r.c1_hat.unwrap().abs() < 1e-6);
    assert!((r.c0_hat.unwrap() - 0.8).abs() < 1e-6);
    assert!(r.warnings.contains(&EstimateWarning::FlatObjective));

    let r = grid_search_rmse(&composite_echo(&s, 0.5, 0.5, 0.6).unwrap(), &s, (0.05, 0.3), 21).unwrap();
    assert!(r.warnings.contains(&EstimateWarning::Boundary));
    assert!(grid_search_rmse(&y, &s, (0.3, 0.1), 21).is_err());
    assert!(grid_search_rmse(&y, &s, (0.0, 0.1), 1).is_err());
}

#[test]
fn likelihood_and_grid_agree_without_noise() {
    let f = optimal(1e-3);
    for lk in [0.05, 0.1] {
        let s = two_reflector_echo(&f, &ReflectorScene::new(1.0, -lk / 2.0, lk).unwrap(), false).unwrap();
        let a = mle_estimate(&s, &f, None).unwrap().l_hat;
        let b = grid_search_rmse(&s, &f, (0.0, 2.0 * lk), 201).unwrap().l_hat;
        assert!(((a - b) / b).abs() < 0.02, "{a} vs {b}");
    }
}

fn mc(f: &SampledWaveform<f64>, l: f64, sigma2: f64, trials: usize, seed: u64) -> MonteCarloConfig<f64> {
    MonteCarloConfig {
        scene: ReflectorScene::new(1.0, 0.0, l).unwrap(),
        noise: NoiseSpec::for_waveform(sigma2, f).unwrap(),
        trials,
        estimator: Estimator::Mle,
        master_seed: seed,
        multipath: None,
        x0_window: Some(std::f64::consts::FRAC_PI_2),
    }
}

#[test]
fn monte_carlo_is_deterministic() {
    let f = optimal(1e-2);
    let cfg = mc(&f, 0.2, 1e-3, 40, 9);
    let a = monte_carlo(&f, &cfg).unwrap();
    let b = monte_carlo(&f, &cfg).unwrap();
    assert_eq!(a, b);
    let c = monte_carlo(&f, &MonteCarloConfig { master_seed: 10, ..cfg }).unwrap();
    assert_ne!(a.mean_l_hat, c.mean_l_hat);
    assert_eq!(a.trials, 40);
    assert_eq!(a.succeeded + a.failures, 40);
}

#[test]
fn noiseless_monte_carlo_has_no_spread() {
    let f = optimal(1e-2);
    let s = monte_carlo(&f, &mc(&f, 0.2, 0.0, 2, 1)).unwrap();
    assert!(s.var_l_hat < 1e-20);
    assert!(mc(&f, 0.2, 0.0, 1, 1).trials == 1 && monte_carlo(&f, &mc(&f, 0.2, 0.0, 1, 1)).is_err());
}

#[test]
fn clamping_at_zero_separation() {
    let f = optimal(1e-2);
    let s = monte_carlo(&f, &mc(&f, 0.0, 1e-6, 2000, 3)).unwrap();
    // Noise alone makes the signed estimate negative about half the time.
    assert!(s.clamp_rate > 0.45 && s.clamp_rate < 0.55, "{}", s.clamp_rate);
    let spread = s.mean_l_hat * s.mean_l_hat + s.var_l_hat;
    assert!(s.median_l_hat_squared.abs() < 0.1 * spread, "{} vs {spread}", s.median_l_hat_squared);
}

#[test]
fn multipath_biases_upward() {
    let f = optimal(1e-2);
    let l = 0.1;
    let cfg = MonteCarloConfig {
        estimator: Estimator::Grid { l_min: 0.0, l_max: 3.0 * l, steps: 201 },
        multipath: Some(CableNetwork::new(l, 0.2, 0.9, 10).unwrap()),
        ..mc(&f, l, 1e-8, 20, 4)
    };
    let s = monte_carlo(&f, &cfg).unwrap();
    assert!(s.multipath);
    assert!(s.mean_l_hat > l * 1.1, "{}", s.mean_l_hat);
    assert!(s.bias > 0.0);
}

#[test]
fn grid_resolves_small_delays() {
    // Nearly collinear templates: S(t) and S(t + d) with d k = 0.005.
    let s = sinc_cosine_waveform(50.0, 1.0, 1e-4).unwrap();
    for d in [0.005_f64, 0.02] {
        let y = composite_echo(&s, 0.5, 0.5, d).unwrap();
        let r = grid_search_rmse(&y, &s, (0.0, 2.0 * d), 201).unwrap();
        assert!(((r.l_hat - d) / d).abs() < 1e-3, "{d}: {}", r.l_hat);
        assert!((r.c1_hat.unwrap() - 0.5).abs() < 1e-3);
    }
}
