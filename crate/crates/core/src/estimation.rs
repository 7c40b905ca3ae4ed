//! Estimators of the reflector separation and their Monte Carlo evaluation.
//!
//! The maximum-likelihood estimator works on the raw echo
//! `s = A (f(x - x0 + l/2) + f(x - x0 - l/2)) / 2 + noise`. With the
//! leading-order model `A (f + (l^2/8) f'')` the estimating equations
//! `int (s - mu) f^(n) = 0`, `n = 0, 1, 2`, give
//!
//! ```text
//! l^2 / 8 = (int s f'' / int s f + int f'^2) / Var[p^2],
//! A = int s f / (1 - (l^2/8) int f'^2),
//! ```
//!
//! and the `n = 1` equation fixes `x0` as the stationary point of the
//! cross-correlation `C(tau) = int s(x) f(x - tau) dx`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::echo::{add_noise_stream, multipath_echo, two_reflector_echo, CableNetwork, ReflectorScene};
use crate::error::{Error, Result};
use crate::fisher::{crb_l_exact, NoiseSpec, DEGENERATE_VAR_P2};
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::{FftPair, PhaseRamp, Spectrum};
use crate::waveform::SampledWaveform;

/// `int s f` must exceed this many noise standard deviations.
pub const NO_SIGNAL_SIGMAS: f64 = 3.0;

/// `1 - (G/E)^2` of the grid-search Gram matrix below which the two
/// templates are treated as collinear.
pub const CONDITIONING_LIMIT: f64 = 1e-10;

/// Relative spread of the grid-search objective below which it counts as flat.
pub const FLAT_OBJECTIVE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateWarning {
    /// The grid-search minimum sits on a bound.
    Boundary,
    /// The two grid-search templates are nearly collinear.
    IllConditioned,
    /// The grid-search objective does not vary with the delay.
    FlatObjective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult<T> {
    pub l_hat: T,
    /// Signed estimate before clamping.
    pub l_hat_squared: T,
    pub a_hat: T,
    pub x0_hat: T,
    pub c0_hat: Option<T>,
    pub c1_hat: Option<T>,
    /// Set iff `l_hat_squared < 0`.
    pub clamped: bool,
    /// Log-likelihood up to constants (maximum likelihood) or RMSE (grid search).
    pub objective: T,
    pub warnings: Vec<EstimateWarning>,
}

impl<T: Real> EstimateResult<T> {
    fn from_squared(l_hat_squared: T) -> (T, bool) {
        (l_hat_squared.max(T::zero()).sqrt(), l_hat_squared < T::zero())
    }
}

/// A pulse prepared for repeated maximum-likelihood estimates.
pub struct MleTemplate<T: Real> {
    spectrum: Spectrum<T>,
    plan: FftPair<T>,
    grid: SampledWaveform<T>,
    /// `int |f'|^2`
    k2: T,
    /// `int |f''|^2`
    k4: T,
    var_p2: T,
    x0_window: Option<(T, T)>,
}

impl<T: Real> MleTemplate<T> {
    pub fn new(f: &SampledWaveform<T>) -> Result<Self> {
        f.require_normalized()?;
        let plan = FftPair::new(f.len());
        let spectrum = Spectrum::with_plan(f, &plan);
        let k2 = spectrum.inner_derivatives(1, &spectrum, 1);
        let k4 = spectrum.inner_derivatives(2, &spectrum, 2);
        let var_p2 = k4 - k2 * k2;
        if var_p2.abs() <= lit::<T>(DEGENERATE_VAR_P2) * k2 * k2 || var_p2.abs() <= T::min_positive_value() {
            return Err(Error::DegeneratePulse { var_p2: to_f64(var_p2) });
        }
        Ok(MleTemplate {
            spectrum,
            plan,
            grid: f.clone(),
            k2,
            k4,
            var_p2,
            x0_window: None,
        })
    }

    /// Restricts the coarse `x0` search to `[lo, hi]`. Pulses with a strong
    /// carrier have correlation side lobes almost as high as the main peak,
    /// so a prior window keeps noisy estimates on the right lobe.
    pub fn with_x0_window(mut self, lo: T, hi: T) -> Result<Self> {
        if !(hi >= lo) {
            return Err(Error::invalid("x0_window", "upper end must not be below the lower end"));
        }
        self.x0_window = Some((lo, hi));
        Ok(self)
    }

    pub fn var_p2(&self) -> T {
        self.var_p2
    }

    pub fn k2(&self) -> T {
        self.k2
    }

    /// Estimates `(A, x0, l)` from `s`. With `noise` given, a projection
    /// `int s f` within `NO_SIGNAL_SIGMAS` noise deviations of zero is
    /// rejected.
    pub fn estimate(&self, s: &SampledWaveform<T>, noise: Option<&NoiseSpec<T>>) -> Result<EstimateResult<T>> {
        s.require_same_grid(&self.grid)?;
        let sig = Spectrum::with_plan(s, &self.plan);
        let n = sig.len();
        let dt = sig.dt;
        let cross: Vec<_> = sig
            .bins
            .iter()
            .zip(&self.spectrum.bins)
            .map(|(a, b)| a * b.conj())
            .collect();

        // Coarse peak of C on the sample lags.
        let corr = self.plan.inverse(&cross);
        let lag = |m: usize| -> T {
            if 2 * m < n {
                lit::<T>(m as f64) * dt
            } else {
                -lit::<T>((n - m) as f64) * dt
            }
        };
        let mut best: Option<(usize, T)> = None;
        for (m, c) in corr.iter().enumerate() {
            let tau = lag(m);
            if let Some((lo, hi)) = self.x0_window {
                if tau < lo - dt || tau > hi + dt {
                    continue;
                }
            }
            if best.is_none_or(|(_, v)| c.re > v) {
                best = Some((m, c.re));
            }
        }
        let (m_best, _) = best.ok_or_else(|| Error::invalid("x0_window", "contains no sample lag"))?;
        let (x0_hat, [p0, _, p2]) = refine_peak(&cross, &sig.k, lag(m_best), dt);

        let floor = noise.map_or(T::zero(), |ns| lit::<T>(NO_SIGNAL_SIGMAS) * ns.continuum_variance().sqrt());
        if !(p0.abs() > floor) || p0.is_zero() {
            return Err(Error::NoSignal {
                projection: to_f64(p0),
                floor: to_f64(floor),
            });
        }
        let t = (p2 / p0 + self.k2) / self.var_p2;
        let l_hat_squared = lit::<T>(8.0) * t;
        let (l_hat, clamped) = EstimateResult::from_squared(l_hat_squared);
        let a_hat = p0 / (T::one() - t * self.k2);
        let s2 = s.power();
        let model2 = T::one() - lit::<T>(2.0) * t * self.k2 + t * t * self.k4;
        let resid = s2 - lit::<T>(2.0) * a_hat * (p0 + t * p2) + a_hat * a_hat * model2;
        Ok(EstimateResult {
            l_hat,
            l_hat_squared,
            a_hat,
            x0_hat,
            c0_hat: None,
            c1_hat: None,
            clamped,
            objective: -resid / lit(2.0),
            warnings: Vec::new(),
        })
    }

}

/// `C(tau)`, `C'(tau)` and `C''(tau)` of the cross-correlation whose
/// spectrum is `cross`.
fn correlation_derivs<T: Real>(cross: &[Complex<T>], k: &[T], dt: T, tau: T) -> [T; 3] {
    let n = cross.len();
    let mut acc = [T::zero(); 3];
    for ((x, &k), p) in cross.iter().zip(k).zip(PhaseRamp::new(n, dt, tau)) {
        let z = x * p;
        acc[0] = acc[0] + z.re;
        acc[1] = acc[1] - k * z.im;
        acc[2] = acc[2] - k * k * z.re;
    }
    let scale = dt / lit::<T>(n as f64);
    acc.map(|a| a * scale)
}

/// Safeguarded Newton iteration for `C'(tau) = 0` within one sample of
/// the coarse peak. Returns the root and the correlation derivatives there.
fn refine_peak<T: Real>(cross: &[Complex<T>], k: &[T], start: T, dt: T) -> (T, [T; 3]) {
    let at = |tau: T| correlation_derivs(cross, k, dt, tau);
    let (mut lo, mut hi) = (start - dt, start + dt);
    let mut x = start;
    let mut d = at(x);
    if !(at(lo)[1] > T::zero() && at(hi)[1] < T::zero()) {
        return (x, d);
    }
    let tol = dt * lit(1e-12);
    for _ in 0..40 {
        if d[1] > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - d[1] / d[2];
        let next = if d[2] < T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / lit(2.0)
        };
        let moved = (next - x).abs();
        x = next;
        d = at(x);
        if moved < tol || d[1].is_zero() {
            break;
        }
    }
    (x, d)
}

/// One-shot maximum-likelihood estimate of `(A, x0, l)`.
pub fn mle_estimate<T: Real>(
    s: &SampledWaveform<T>,
    f: &SampledWaveform<T>,
    noise: Option<&NoiseSpec<T>>,
) -> Result<EstimateResult<T>> {
    MleTemplate::new(f)?.estimate(s, noise)
}

/// Least-squares fit of `c0 S(t) + c1 S(t + d)` over a grid of delays
/// `d` in `[l_min, l_max]`, refined by a parabola through the mean squared
/// error at the best grid point and its neighbours.
///
/// The model is the two-reflector echo with `x0 = -d/2`, which is what
/// `x0_hat` reports; `a_hat` is `c0 + c1`.
pub fn grid_search_rmse<T: Real>(
    s: &SampledWaveform<T>,
    template: &SampledWaveform<T>,
    bounds: (T, T),
    steps: usize,
) -> Result<EstimateResult<T>> {
    s.require_same_grid(template)?;
    let (l_min, l_max) = bounds;
    if steps < 2 {
        return Err(Error::invalid("steps", "at least two grid points are required"));
    }
    if !(l_max > l_min) || !(l_min >= T::zero()) || !l_max.is_finite() {
        return Err(Error::invalid("bounds", "need finite 0 <= l_min < l_max"));
    }
    let plan = FftPair::new(s.len());
    let ss = Spectrum::with_plan(template, &plan);
    let sy = Spectrum::with_plan(s, &plan);
    let n = s.len();
    let scale = ss.dt / lit::<T>(n as f64);
    let energy = ss.total_weight() * scale;
    let y0 = sy.inner(&ss);
    let signal = s.power();
    let duration = lit::<T>(n as f64) * s.dt();
    let auto: Vec<T> = ss.bins.iter().map(|b| b.norm_sqr()).collect();
    let cross: Vec<_> = sy.bins.iter().zip(&ss.bins).map(|(y, b)| y * b.conj()).collect();

    // Fit in the basis {S, D} with D = S(t + d) - S(t), which stays well
    // conditioned as d -> 0. With h = exp(-ikd/2), exp(-ikd) - 1 = 2i h Im(h),
    // so 1 - cos(kd) and <y, D> come without cancellation.
    let residual0 = signal - y0 * y0 / energy;
    let fit = |d: T| -> (T, T, T, T) {
        let mut gap = T::zero();
        let mut proj = T::zero();
        for ((&p, x), h) in auto.iter().zip(&cross).zip(PhaseRamp::new(n, s.dt(), -d * lit(0.5))) {
            let sh = h.im;
            gap = gap + p * sh * sh;
            proj = proj + (x * h * Complex::new(T::zero(), sh)).re;
        }
        // gap = E - <S, S(t + d)>, proj = <y, D>.
        let two = lit::<T>(2.0);
        let gap = gap * scale * two;
        let proj = proj * scale * two;
        // Component of D orthogonal to S.
        let perp2 = two * gap - gap * gap / energy;
        let perp_y = proj + gap / energy * y0;
        let c1 = if perp2 > T::zero() { perp_y / perp2 } else { T::zero() };
        let c0 = (y0 + gap * c1) / energy - c1;
        let explained = if perp2 > T::zero() { perp_y * perp_y / perp2 } else { T::zero() };
        let mse = (residual0 - explained) / duration;
        let ratio = gap / energy;
        (c0, c1, mse, ratio * (two - ratio))
    };

    let h = (l_max - l_min) / lit::<T>((steps - 1) as f64);
    let delay = |i: usize| l_min + h * lit::<T>(i as f64);
    let mse: Vec<T> = if n * steps >= 1 << 20 {
        (0..steps).into_par_iter().map(|i| fit(delay(i)).2).collect()
    } else {
        (0..steps).map(|i| fit(delay(i)).2).collect()
    };
    let finite = |v: T| if v.is_finite() { v } else { T::infinity() };
    let (i_best, _) = mse
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |(bi, bv), (i, &v)| if finite(v) < bv { (i, finite(v)) } else { (bi, bv) });

    let mut warnings = Vec::new();
    let mut d_hat = delay(i_best);
    if i_best == 0 || i_best == steps - 1 {
        warnings.push(EstimateWarning::Boundary);
    } else {
        let (a, b, c) = (mse[i_best - 1], mse[i_best], mse[i_best + 1]);
        let curv = a - lit::<T>(2.0) * b + c;
        if curv > T::zero() {
            d_hat = d_hat + h * (a - c) / (lit::<T>(2.0) * curv);
        }
    }
    let lo = mse.iter().copied().filter(|v| v.is_finite()).fold(T::infinity(), T::min);
    let hi = mse.iter().copied().filter(|v| v.is_finite()).fold(T::neg_infinity(), T::max);
    if !(hi - lo > lit::<T>(FLAT_OBJECTIVE) * hi.abs().max(signal / duration)) {
        warnings.push(EstimateWarning::FlatObjective);
    }
    let (c0, c1, m, cond) = fit(d_hat);
    if !(cond > lit(CONDITIONING_LIMIT)) {
        warnings.push(EstimateWarning::IllConditioned);
    }
    let d_hat = d_hat.max(T::zero());
    Ok(EstimateResult {
        l_hat: d_hat,
        l_hat_squared: d_hat * d_hat,
        a_hat: c0 + c1,
        x0_hat: -d_hat / lit(2.0),
        c0_hat: Some(c0),
        c1_hat: Some(c1),
        clamped: false,
        objective: m.max(T::zero()).sqrt(),
        warnings,
    })
}

/// Default number of grid-search delays.
pub const DEFAULT_GRID_STEPS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimator<T> {
    Mle,
    Grid { l_min: T, l_max: T, steps: usize },
}

impl<T> Estimator<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Grid { .. } => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig<T> {
    pub scene: ReflectorScene<T>,
    pub noise: NoiseSpec<T>,
    pub trials: usize,
    pub estimator: Estimator<T>,
    pub master_seed: u64,
    /// Replaces the ideal echo by the multipath return of this network;
    /// the true separation is then its `stub_roundtrip`.
    pub multipath: Option<CableNetwork<T>>,
    /// Half-width of the prior window on `x0` for the likelihood estimator.
    pub x0_window: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary<T> {
    pub trials: usize,
    pub succeeded: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    pub l_true: T,
    pub mean_l_hat: T,
    /// Sample variance with `M - 1` in the denominator.
    pub var_l_hat: T,
    pub bias: T,
    /// Single-trial bound for the ideal model at `l_true`.
    pub crb_l: T,
    pub clamp_rate: T,
    pub mean_l_hat_squared: T,
    pub median_l_hat_squared: T,
    pub mean_a_hat: T,
    pub mean_x0_hat: T,
    pub estimator: String,
    pub master_seed: u64,
    pub sigma2: T,
    pub multipath: bool,
}

/// Runs `cfg.trials` noisy realizations of the echo of `f` and summarizes
/// the estimates. Trial `j` draws its noise from stream `j` of the
/// generator seeded with `master_seed`, so the summary is reproducible
/// bit for bit regardless of scheduling.
///
/// The grid estimator's model places the reflectors at `0` and `-l`, so
/// for it (and for the multipath return, which is built the same way) the
/// scene offset is taken as `x0 = -l/2`.
pub fn monte_carlo<T: Real>(f: &SampledWaveform<T>, cfg: &MonteCarloConfig<T>) -> Result<MonteCarloSummary<T>> {
    if cfg.trials < 2 {
        return Err(Error::invalid("M", "at least two trials are required"));
    }
    let half = lit::<T>(0.5);
    let l_true = cfg.multipath.map_or(cfg.scene.l, |net| net.stub_roundtrip);
    let composite_layout = cfg.multipath.is_some() || matches!(cfg.estimator, Estimator::Grid { .. });
    let x0 = if composite_layout { -l_true * half } else { cfg.scene.x0 };
    let scene = ReflectorScene::new(cfg.scene.a, x0, l_true)?;
    let clean = match &cfg.multipath {
        Some(net) => multipath_echo(f, net)?.signal.scaled(scene.a),
        None => two_reflector_echo(f, &scene, false)?,
    };

    let template = match cfg.estimator {
        Estimator::Mle => {
            let t = MleTemplate::new(f)?;
            Some(match cfg.x0_window {
                Some(w) => t.with_x0_window(x0 - w, x0 + w)?,
                None => t,
            })
        }
        Estimator::Grid { .. } => None,
    };
    let run = |trial: usize| -> Result<EstimateResult<T>> {
        let s = add_noise_stream(&clean, &cfg.noise, cfg.master_seed, trial as u64);
        match (&cfg.estimator, &template) {
            (Estimator::Grid { l_min, l_max, steps }, _) => grid_search_rmse(&s, f, (*l_min, *l_max), *steps),
            (Estimator::Mle, Some(t)) => t.estimate(&s, Some(&cfg.noise)),
            (Estimator::Mle, None) => unreachable!("template is built for the likelihood estimator"),
        }
    };
    let results: Vec<Result<EstimateResult<T>>> = (0..cfg.trials).into_par_iter().map(run).collect();

    let mut first_failure = None;
    let mut ok = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(e) => ok.push(e),
            Err(e) => {
                if first_failure.is_none() {
                    first_failure = Some(e.to_string());
                }
            }
        }
    }
    if ok.len() < 2 {
        return Err(Error::InsufficientTrials {
            trials: cfg.trials,
            succeeded: ok.len(),
        });
    }
    let m = lit::<T>(ok.len() as f64);
    let mean = |g: &dyn Fn(&EstimateResult<T>) -> T| ok.iter().map(g).sum::<T>() / m;
    let mean_l_hat = mean(&|e| e.l_hat);
    let var_l_hat = ok.iter().map(|e| (e.l_hat - mean_l_hat).powi(2)).sum::<T>() / (m - T::one());
    let mut squares: Vec<T> = ok.iter().map(|e| e.l_hat_squared).collect();
    squares.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = squares.len() / 2;
    let median = if squares.len() % 2 == 1 {
        squares[mid]
    } else {
        (squares[mid - 1] + squares[mid]) * half
    };
    Ok(MonteCarloSummary {
        trials: cfg.trials,
        succeeded: ok.len(),
        failures: cfg.trials - ok.len(),
        first_failure,
        l_true,
        mean_l_hat,
        var_l_hat,
        bias: mean_l_hat - l_true,
        crb_l: crb_l_exact(f, &scene, &cfg.noise),
        clamp_rate: lit::<T>(ok.iter().filter(|e| e.clamped).count() as f64) / m,
        mean_l_hat_squared: mean(&|e| e.l_hat_squared),
        median_l_hat_squared: median,
        mean_a_hat: mean(&|e| e.a_hat),
        mean_x0_hat: mean(&|e| e.x0_hat),
        estimator: cfg.estimator.name().to_string(),
        master_seed: cfg.master_seed,
        sigma2: cfg.noise.sigma2,
        multipath: cfg.multipath.is_some(),
    })
}
