use std::fs;
use std::path::Path;

use bandpulse::harness::io::{mc_csv, read_json, read_mc_csv, read_pairs, read_waveform, waveform_csv, McRow};
use bandpulse::harness::{
    cell_seed, cmd_curves, cmd_estimate, cmd_fisher, cmd_montecarlo, cmd_simulate, cmd_synth, CellReport,
    ExperimentConfig, FisherOutput, HarnessError, PulseCoefficients, SimulateReport, SynthMetadata,
};
use bandpulse::waveform::SampledWaveform;
use num_complex::Complex;

fn config(text: &str) -> ExperimentConfig {
    text.parse().unwrap()
}

const SMALL: &str = "pulse.tail = 1e-2\nmc.trials = 20\n";

#[test]
fn waveform_csv_round_trip() {
    let w = SampledWaveform::from_fn(-3.25, 0.125, 53, |t: f64| Complex::new(t.sin() / 7.0, (2.0 * t).cos()))
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    fs::write(&path, waveform_csv(&w, &["pulse = test".into()]).unwrap()).unwrap();
    assert_eq!(read_waveform(&path).unwrap(), w);
}

#[test]
fn mc_csv_round_trip() {
    let rows = vec![
        McRow {
            l_over_vtau: 0.1,
            mean_lhat_over_vtau: 0.1023,
            var_lhat: 1.5e-5,
            crb: 1.1e-5,
            bias: 0.0023,
            clamp_rate: 0.0,
            m: 1000,
            seed: 42,
        },
        McRow {
            l_over_vtau: 0.3,
            mean_lhat_over_vtau: f64::NAN,
            var_lhat: f64::NAN,
            crb: f64::NAN,
            bias: f64::NAN,
            clamp_rate: f64::NAN,
            m: 1000,
            seed: 43,
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.csv");
    fs::write(&path, mc_csv(&rows, &["note".into()]).unwrap()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# note\n"));
    assert!(text.contains("l_over_Vtau,mean_lhat_over_Vtau,var_lhat,crb,bias,clamp_rate,M,seed"));
    let back = read_mc_csv(&path).unwrap();
    assert_eq!(back[0], rows[0]);
    assert!(back[1].var_lhat.is_nan() && back[1].seed == 43);
}

#[test]
fn synth_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let meta = cmd_synth(&config(SMALL), dir.path()).unwrap();
    let w = read_waveform(&dir.path().join("waveform.csv")).unwrap();
    assert_eq!(w.len(), meta.grid.len);
    assert!((w.power() - 1.0).abs() < 1e-9);
    let back: SynthMetadata = read_json(&dir.path().join("metadata.json")).unwrap();
    assert_eq!(back, meta);
    let coeffs: PulseCoefficients = read_json(&dir.path().join("coefficients.json")).unwrap();
    match coeffs {
        PulseCoefficients::LegendreOptimal { n, coefficients, figure, .. } => {
            assert_eq!(n, 12);
            assert_eq!(coefficients.len(), 12);
            assert!((figure - 0.92).abs() < 0.02);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(fs::read_to_string(dir.path().join("waveform.csv")).unwrap().contains("vtau_convention"));
}

#[test]
fn comb_synth_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let meta = cmd_synth(&config("pulse.kind = comb\nband.k_lower = 1.5915\nband.k_upper = 7.9577\n"), dir.path())
        .unwrap();
    let want = meta.var_p2_analytic.unwrap();
    assert!(((meta.var_p2 - want) / want).abs() < 0.01);
    assert!(meta.resolving_power.is_none());
}

#[test]
fn comb_fisher_reference() {
    let dir = tempfile::tempdir().unwrap();
    let s = cmd_fisher(&config("pulse.kind = comb\nscene.l = 0.02\n"), dir.path()).unwrap();
    let reference = s.comb_reference_information.unwrap();
    assert!(((s.fisher_small_l - reference) / reference).abs() < 1e-9);
    assert!(s.relative_difference < 0.01);
    let out: FisherOutput = read_json(&dir.path().join("fisher.json")).unwrap();
    assert_eq!(out.result.unwrap(), s);
    assert!(out.error.is_none());
}

#[test]
fn tone_fisher_records_degeneracy() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_fisher(&config("pulse.kind = tone\n"), dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let out: FisherOutput = read_json(&dir.path().join("fisher.json")).unwrap();
    assert!(out.result.is_none());
    let kind = out.error.unwrap().kind;
    assert!(kind == "singular_information" || kind == "degenerate_pulse", "{kind}");
}

#[test]
fn fisher_needs_noise() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_fisher(&config("noise.sigma2 = 0\npulse.tail = 1e-2\n"), dir.path()).unwrap_err();
    assert!(matches!(&err, HarnessError::Config(c) if c.field == "noise.sigma2"));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn curves_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = cmd_curves(&config("curves.n_max = 20\ncurves.d_values = 2, 10, 50\n"), dir.path()).unwrap();
    assert_eq!(c.r_vs_n.len(), 19);
    let n: Vec<(usize, f64)> = read_pairs(&dir.path().join("r_vs_n.csv")).unwrap();
    assert_eq!(n, c.r_vs_n);
    let d: Vec<(f64, f64)> = read_pairs(&dir.path().join("r_vs_d.csv")).unwrap();
    assert_eq!(d, c.r_vs_d);
}

fn simulate_then_estimate(extra: &str, dir: &Path) -> (SimulateReport, f64) {
    let cfg = config(&format!("{SMALL}scene.l = 0.1\nnoise.sigma2 = 1e-8\nmc.seed = 5\n{extra}"));
    let sim = cmd_simulate(&cfg, dir).unwrap();
    let echo = dir.join("echo.csv");
    let cfg = config(&format!(
        "{SMALL}scene.l = 0.1\nnoise.sigma2 = 1e-8\n{extra}estimate.signal = {}\n",
        echo.display()
    ));
    let est = cmd_estimate(&cfg, dir).unwrap();
    (sim, est.result.l_hat)
}

#[test]
fn simulate_and_estimate() {
    for extra in ["", "mc.estimator = grid\n"] {
        let dir = tempfile::tempdir().unwrap();
        let (sim, l_hat) = simulate_then_estimate(extra, dir.path());
        assert!((l_hat - 0.1).abs() < 0.01, "{extra}: {l_hat}");
        let back: SimulateReport = read_json(&dir.path().join("simulate.json")).unwrap();
        assert_eq!(back, sim);
        let clean = read_waveform(&dir.path().join("echo_clean.csv")).unwrap();
        let noisy = read_waveform(&dir.path().join("echo.csv")).unwrap();
        assert!(clean.same_grid(&noisy));
        assert!(dir.path().join("estimate.json").exists());
    }
}

#[test]
fn estimate_needs_a_signal() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_estimate(&config(SMALL), dir.path()).unwrap_err();
    assert!(matches!(&err, HarnessError::Config(c) if c.field == "estimate.signal"));
}

#[test]
fn montecarlo_is_byte_identical() {
    let cfg = config(&format!("{SMALL}sweep.l_over_vtau = 0.1, 0.3\nnoise.sigma2 = 1e-6\nmc.seed = 17\n"));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cells = cmd_montecarlo(&cfg, a.path()).unwrap();
    cmd_montecarlo(&cfg, b.path()).unwrap();
    for name in ["montecarlo.csv", "montecarlo.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[0].seed, 17);
    assert_eq!(cells[1].seed, cell_seed(17, 1));
    let rows = read_mc_csv(&a.path().join("montecarlo.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    for (row, cell) in rows.iter().zip(&cells) {
        let s = cell.summary.as_ref().unwrap();
        assert_eq!(row.m, 20);
        assert!((row.mean_lhat_over_vtau - s.mean_l_hat / cell.vtau).abs() < 1e-12);
        assert!((row.var_lhat - s.var_l_hat / (cell.vtau * cell.vtau)).abs() < 1e-12 * row.var_lhat.max(1e-300));
        // The band is scaled so that l / V_tau hits the requested ratio.
        assert!((0.05 / cell.vtau - row.l_over_vtau).abs() < 1e-12);
    }
    let json: Vec<CellReport> = read_json(&a.path().join("montecarlo.json")).unwrap();
    assert_eq!(json, cells);
    let header = fs::read_to_string(a.path().join("montecarlo.csv")).unwrap();
    assert!(header.starts_with("# vtau_convention"));
    assert!(header.contains("master_seed = 17"));
}

#[test]
fn noiseless_pair_of_trials_has_no_variance() {
    let dir = tempfile::tempdir().unwrap();
    let cells = cmd_montecarlo(&config("pulse.tail = 1e-2\nnoise.sigma2 = 0\nmc.trials = 2\n"), dir.path()).unwrap();
    let s = cells[0].summary.as_ref().unwrap();
    assert!(s.var_l_hat < 1e-20, "{}", s.var_l_hat);
}

#[test]
fn failing_cells_become_nan_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cells = cmd_montecarlo(&config("pulse.kind = tone\nmc.trials = 4\n"), dir.path()).unwrap();
    assert!(cells[0].error.is_some());
    let rows = read_mc_csv(&dir.path().join("montecarlo.csv")).unwrap();
    assert!(rows[0].mean_lhat_over_vtau.is_nan());
}

#[test]
fn config_errors_name_the_field() {
    let cases = [
        ("pulse.kind = chirp", "pulse.kind"),
        ("pulse.n = 0", "pulse.n"),
        ("noise.sigma2 = -1", "noise.sigma2"),
        ("mc.trials = 1", "mc.trials"),
        ("mc.estimator = bayes", "mc.estimator"),
        ("band.k_lower = 2\nband.k_upper = 1", "band.k_upper"),
        ("scene.l = -0.1", "scene.l"),
        ("scene.a = 0", "scene.a"),
        ("grid.steps = 1", "grid.steps"),
        ("units.vtau = furlongs", "units.vtau"),
        ("sweep.l_over_vtau = 0.1, -2", "sweep.l_over_vtau"),
        ("colour = blue", "colour"),
    ];
    for (text, field) in cases {
        let err = text.parse::<ExperimentConfig>().unwrap_err();
        assert_eq!(err.field, field, "{text}");
    }
    let dup = "pulse.n = 3\npulse.n = 4".parse::<ExperimentConfig>().unwrap_err();
    assert_eq!(dup.field, "pulse.n");
    assert!("just words".parse::<ExperimentConfig>().unwrap_err().field.starts_with("line"));
}
