//! Fisher information for the separation `l` of two equal reflectors, and
//! the three-parameter `(A, x0, l)` information matrix of the raw echo.
//!
//! Integrals over `x` are discrete sums times the sample spacing, so every
//! figure is in continuum units against `Sigma'^2 = dx * sigma2`.

use serde::{Deserialize, Serialize};

use crate::echo::ReflectorScene;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::{derivative, Spectrum};
use crate::waveform::SampledWaveform;

/// Largest fraction of pulse power allowed within `l/2` of the grid ends.
pub const TRUNCATION_LIMIT: f64 = 1e-3;

/// Relative size below which `Var[p^2]` counts as zero, in units of `<k^2>^2`.
pub const DEGENERATE_VAR_P2: f64 = 1e-12;

/// Additive white Gaussian noise: per-sample variance `sigma2` on a grid
/// with spacing `dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T> {
    pub sigma2: T,
    pub dx: T,
}

impl<T: Real> NoiseSpec<T> {
    /// `sigma2 = 0` is accepted and describes a noiseless channel.
    pub fn new(sigma2: T, dx: T) -> Result<Self> {
        if !(sigma2 >= T::zero()) || !sigma2.is_finite() {
            return Err(Error::invalid("sigma2", format!("must be finite and >= 0, got {sigma2}")));
        }
        if !(dx > T::zero()) || !dx.is_finite() {
            return Err(Error::invalid("dx", format!("must be finite and > 0, got {dx}")));
        }
        Ok(NoiseSpec { sigma2, dx })
    }

    pub fn for_waveform(sigma2: T, w: &SampledWaveform<T>) -> Result<Self> {
        Self::new(sigma2, w.dt())
    }

    /// `Sigma'^2 = dx * sigma2`.
    pub fn continuum_variance(&self) -> T {
        self.dx * self.sigma2
    }

    fn require_positive(&self) -> Result<T> {
        let s = self.continuum_variance();
        if s > T::zero() {
            Ok(s)
        } else {
            Err(Error::invalid("sigma2", "information is unbounded for a noiseless channel"))
        }
    }
}

/// `<k^4> - <k^2>^2` of a normalized waveform from its full DFT.
pub fn var_p2<T: Real>(w: &SampledWaveform<T>) -> Result<T> {
    w.require_normalized()?;
    let s = Spectrum::of(w);
    let k2 = s.moment(2);
    Ok(s.moment(4) - k2 * k2)
}

/// The same quantity in position space: `int |f''|^2 - (int |f'|^2)^2`,
/// with the derivatives taken spectrally and the integrals as sums.
pub fn var_p2_position<T: Real>(w: &SampledWaveform<T>) -> Result<T> {
    w.require_normalized()?;
    let d1 = derivative(w, 1).power();
    let d2 = derivative(w, 2).power();
    Ok(d2 - d1 * d1)
}

fn is_degenerate<T: Real>(v: T, k2: T) -> bool {
    v.abs() <= lit::<T>(DEGENERATE_VAR_P2) * k2 * k2 || v.abs() <= T::min_positive_value()
}

fn check_truncation<T: Real>(f: &SampledWaveform<T>, l: T) -> Result<()> {
    let lost = f.edge_power_fraction(l / lit(2.0));
    if lost > lit(TRUNCATION_LIMIT) {
        return Err(Error::Truncation {
            shift: to_f64(l / lit(2.0)),
            lost_fraction: to_f64(lost),
        });
    }
    Ok(())
}

/// Fisher information on `l` of the normalized two-reflector return
/// `N_l (f(x + l/2) + f(x - l/2)) / 2`, at any separation:
///
/// `Sigma^2 I = -(d_l ln N_l)^2 + (N_l^2 / 16) int (f'(x + l/2) - f'(x - l/2))^2`.
///
/// `Sigma^2` is taken as `noise.continuum_variance()`.
pub fn fisher_exact<T: Real>(f: &SampledWaveform<T>, l: T, noise: &NoiseSpec<T>) -> Result<T> {
    f.require_normalized()?;
    if !(l >= T::zero()) {
        return Err(Error::invalid("l", format!("separation must be >= 0, got {l}")));
    }
    let sigma2 = noise.require_positive()?;
    if l.is_zero() {
        return Ok(T::zero());
    }
    check_truncation(f, l)?;

    let s = Spectrum::of(f);
    let scale = s.dt / lit::<T>(s.len() as f64);
    let half = lit::<T>(0.5);
    // int |f_l|^2 with f_l = (f(x + l/2) + f(x - l/2)) / 2.
    let overlap = |l: T| -> T {
        s.bins
            .iter()
            .zip(&s.k)
            .map(|(b, &k)| b.norm_sqr() * (k * l * half).cos().powi(2))
            .sum::<T>()
            * scale
    };
    let diff: T = s
        .bins
        .iter()
        .zip(&s.k)
        .map(|(b, &k)| b.norm_sqr() * k * k * lit::<T>(4.0) * (k * l * half).sin().powi(2))
        .sum::<T>()
        * scale;

    let n2 = overlap(l).recip();
    let step = (l * lit(1e-3)).max(f.dt() * lit(1e-6));
    // ln N_l = -ln(overlap) / 2.
    let dln = -(overlap(l + step).ln() - overlap(l - step).ln()) / (lit::<T>(4.0) * step);
    let info = -dln * dln + n2 / lit(16.0) * diff;
    Ok(info / sigma2)
}

/// Deep-subwavelength limit `l^2 Var[p^2] / (16 Sigma^2)`.
pub fn fisher_small_l<T: Real>(f: &SampledWaveform<T>, l: T, noise: &NoiseSpec<T>) -> Result<T> {
    let sigma2 = noise.require_positive()?;
    Ok(l * l * var_p2(f)? / (lit::<T>(16.0) * sigma2))
}

/// The integrals entering the leading-order information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseIntegrals<T> {
    /// `int f^2`
    pub ff: T,
    /// `int f f'`
    pub ff1: T,
    /// `int f f''`
    pub ff2: T,
    /// `int f'^2`
    pub f1f1: T,
    /// `int f' f''`
    pub f1f2: T,
    /// `int f''^2`
    pub f2f2: T,
}

impl<T: Real> PulseIntegrals<T> {
    pub fn of(f: &SampledWaveform<T>) -> Self {
        let d1 = derivative(f, 1);
        let d2 = derivative(f, 2);
        PulseIntegrals {
            ff: f.inner(f),
            ff1: f.inner(&d1),
            ff2: f.inner(&d2),
            f1f1: d1.inner(&d1),
            f1f2: d1.inner(&d2),
            f2f2: d2.inner(&d2),
        }
    }

    /// `int f''^2 - (int f'^2)^2`.
    pub fn var_p2(&self) -> T {
        self.f2f2 - self.f1f1 * self.f1f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo<T> {
    pub t_start: T,
    pub dt: T,
    pub len: usize,
}

impl<T: Real> GridInfo<T> {
    pub fn of(w: &SampledWaveform<T>) -> Self {
        GridInfo {
            t_start: w.t_start(),
            dt: w.dt(),
            len: w.len(),
        }
    }
}

/// Leading-order information matrix over `(A, x0, l)` and the bounds
/// derived from it.
///
/// `sigma_prime2` is the noise on the raw echo, `dx * sigma2`. The
/// single-parameter bound of the normalized model uses `Sigma = Sigma' / A`,
/// stored as `sigma2_normalized`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport<T> {
    pub matrix: Matrix<T>,
    /// Numerical inverse of the `(A, l)` block.
    pub inverse_al: Matrix<T>,
    /// Closed-form inverse of the `(A, l)` block.
    pub analytic_inverse_al: Matrix<T>,
    /// `(I^-1)_ll / M`.
    pub crb_l: T,
    pub repetitions: usize,
    pub scene: ReflectorScene<T>,
    pub noise: NoiseSpec<T>,
    pub sigma_prime2: T,
    pub sigma2_normalized: T,
    pub integrals: PulseIntegrals<T>,
    pub var_p2: T,
    /// `16 Sigma'^2 / (M l^2 A^2 Var[p^2])`.
    pub small_l_bound: T,
    /// Largest `|I_{A,x0}|`, `|I_{x0,l}|` relative to the diagonal scale.
    pub zero_pattern_residual: T,
    pub zero_pattern_ok: bool,
    pub grid: GridInfo<T>,
    pub label: Option<String>,
}

/// Relative size of the vanishing off-diagonal entries tolerated by
/// `zero_pattern_ok`.
pub const ZERO_PATTERN_TOL: f64 = 1e-8;

/// Builds the leading-order `(A, x0, l)` information matrix
///
/// ```text
/// Sigma'^2 I = | int f^2          0            (A l/4) int f f''  |
///              | 0                A^2 int f'^2  0                  |
///              | (A l/4) int ff'' 0            (A^2 l^2/16) int f''^2 |
/// ```
///
/// with the vanishing entries evaluated rather than assumed, then inverts
/// the `(A, l)` block both numerically and in closed form.
pub fn fisher_multiparam<T: Real>(
    f: &SampledWaveform<T>,
    scene: &ReflectorScene<T>,
    noise: &NoiseSpec<T>,
) -> Result<FisherReport<T>> {
    fisher_multiparam_repeated(f, scene, noise, 1)
}

/// As [`fisher_multiparam`], with the bound divided over `m` repetitions.
pub fn fisher_multiparam_repeated<T: Real>(
    f: &SampledWaveform<T>,
    scene: &ReflectorScene<T>,
    noise: &NoiseSpec<T>,
    m: usize,
) -> Result<FisherReport<T>> {
    f.require_normalized()?;
    if m == 0 {
        return Err(Error::invalid("M", "repetitions must be >= 1"));
    }
    let sp2 = noise.require_positive()?;
    let ints = PulseIntegrals::of(f);
    let v = ints.var_p2();
    if is_degenerate(v, ints.f1f1) {
        return Err(Error::SingularInformation {
            reason: format!(
                "Var[p^2] = {:.3e}: separation cannot be told apart from the overall amplitude",
                to_f64(v)
            ),
        });
    }
    let (a, l) = (scene.a, scene.l);
    if l.is_zero() {
        return Err(Error::SingularInformation {
            reason: "l = 0: the leading-order information on l vanishes".into(),
        });
    }
    let q = a * l / lit(4.0);
    let entries = [
        [ints.ff, -a * ints.ff1, q * ints.ff2],
        [-a * ints.ff1, a * a * ints.f1f1, -a * q * ints.f1f2],
        [q * ints.ff2, -a * q * ints.f1f2, q * q * ints.f2f2],
    ];
    let matrix = Matrix::from_fn(3, 3, |i, j| entries[i][j] / sp2);

    let block = Matrix::from_fn(2, 2, |i, j| {
        let idx = [0, 2];
        matrix[(idx[i], idx[j])]
    });
    let inverse_al = block.inverse()?;
    let r = lit::<T>(4.0) / (l * a);
    let analytic_inverse_al = Matrix::from_fn(2, 2, |i, j| {
        let e = match (i, j) {
            (0, 0) => ints.f2f2,
            (1, 1) => r * r,
            _ => r * ints.f1f1,
        };
        sp2 * e / v
    });

    let mf = lit::<T>(m as f64);
    let diag = matrix[(0, 0)].abs().max(matrix[(1, 1)].abs()).max(matrix[(2, 2)].abs());
    let residual = (matrix[(0, 1)].abs().max(matrix[(1, 2)].abs())) / diag;
    Ok(FisherReport {
        crb_l: inverse_al[(1, 1)] / mf,
        repetitions: m,
        scene: *scene,
        noise: *noise,
        sigma_prime2: sp2,
        sigma2_normalized: sp2 / (a * a),
        integrals: ints,
        var_p2: v,
        small_l_bound: crb_small_l(v, l, sp2, a, m),
        zero_pattern_residual: residual,
        zero_pattern_ok: residual <= lit(ZERO_PATTERN_TOL),
        grid: GridInfo::of(f),
        label: None,
        matrix,
        inverse_al,
        analytic_inverse_al,
    })
}

/// `16 Sigma'^2 / (M l^2 A^2 Var[p^2])`.
pub fn crb_small_l<T: Real>(var_p2: T, l: T, sigma_prime2: T, a: T, m: usize) -> T {
    lit::<T>(16.0) * sigma_prime2 / (lit::<T>(m as f64) * l * l * a * a * var_p2)
}

/// Per-parameter lower bounds `diag(I^-1) / M` in the order `(A, x0, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbBounds<T> {
    pub a: T,
    pub x0: T,
    pub l: T,
}

pub fn crb<T: Real>(report: &FisherReport<T>, m: usize) -> Result<CrbBounds<T>> {
    if m == 0 {
        return Err(Error::invalid("M", "repetitions must be >= 1"));
    }
    let inv = report.matrix.inverse()?;
    let mf = lit::<T>(m as f64);
    Ok(CrbBounds {
        a: inv[(0, 0)] / mf,
        x0: inv[(1, 1)] / mf,
        l: inv[(2, 2)] / mf,
    })
}

/// The `(A, x0, l)` information of the exact mean echo
/// `A (f(x - x0 + l/2) + f(x - x0 - l/2)) / 2` at finite `l`, computed
/// spectrally and scaled to unit `Sigma'^2`.
pub fn geometry_matrix_exact<T: Real>(f: &SampledWaveform<T>, scene: &ReflectorScene<T>) -> Matrix<T> {
    let s = Spectrum::of(f);
    let scale = s.dt / lit::<T>(s.len() as f64);
    let half = lit::<T>(0.5);
    let (a, l) = (scene.a, scene.l);
    let mut acc = [T::zero(); 4];
    for (b, &k) in s.bins.iter().zip(&s.k) {
        let p = b.norm_sqr();
        let (sn, cs) = (k * l * half).sin_cos();
        acc[0] = acc[0] + p * cs * cs;
        acc[1] = acc[1] + p * k * k * cs * cs;
        acc[2] = acc[2] + p * k * sn * cs;
        acc[3] = acc[3] + p * k * k * sn * sn;
    }
    let [cc, kkcc, kcs, kkss] = acc.map(|x| x * scale);
    // d/dA = F cos, d/dx0 = -ik A F cos, d/dl = -(k/2) A F sin, all times the
    // common phase exp(-ik x0); the x0 cross terms are purely imaginary.
    let entries = [
        [cc, T::zero(), -a * half * kcs],
        [T::zero(), a * a * kkcc, T::zero()],
        [-a * half * kcs, T::zero(), a * a * lit::<T>(0.25) * kkss],
    ];
    Matrix::from_fn(3, 3, |i, j| entries[i][j])
}

/// Exact-model information matrix, `geometry_matrix_exact / Sigma'^2`.
pub fn fisher_matrix_exact<T: Real>(
    f: &SampledWaveform<T>,
    scene: &ReflectorScene<T>,
    noise: &NoiseSpec<T>,
) -> Result<Matrix<T>> {
    let sp2 = noise.require_positive()?;
    Ok(geometry_matrix_exact(f, scene).scaled(sp2.recip()))
}

/// Single-trial bound on `l` for the exact model: `Sigma'^2 (J^-1)_ll` where
/// `J` is the geometry matrix. Zero for a noiseless channel, infinite when
/// the information on `l` vanishes.
pub fn crb_l_exact<T: Real>(f: &SampledWaveform<T>, scene: &ReflectorScene<T>, noise: &NoiseSpec<T>) -> T {
    let sp2 = noise.continuum_variance();
    if sp2.is_zero() {
        return T::zero();
    }
    match geometry_matrix_exact(f, scene).inverse() {
        Ok(inv) if inv[(2, 2)] > T::zero() => sp2 * inv[(2, 2)],
        _ => T::infinity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn tone(k_lines: usize, n: usize) -> SampledWaveform<f64> {
        let dt = 0.1;
        let k0 = std::f64::consts::TAU * k_lines as f64 / (n as f64 * dt);
        SampledWaveform::from_fn(0.0, dt, n, |t| Complex::new((k0 * t).sin(), 0.0))
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::new(-1.0_f64, 1.0).is_err());
        assert!(NoiseSpec::new(1.0_f64, 0.0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 1.0).is_err());
        let n = NoiseSpec::new(0.5_f64, 0.2).unwrap();
        assert!((n.continuum_variance() - 0.1).abs() < 1e-16);
    }

    #[test]
    fn tone_has_no_separation_information() {
        let f = tone(8, 256);
        assert!(var_p2(&f).unwrap().abs() < 1e-10);
        let noise = NoiseSpec::new(1.0, f.dt()).unwrap();
        assert!(fisher_exact(&f, 0.01, &noise).unwrap().abs() < 1e-8);
        let scene = ReflectorScene::new(1.0, 0.0, 0.05).unwrap();
        assert!(matches!(
            fisher_multiparam(&f, &scene, &noise),
            Err(Error::SingularInformation { .. })
        ));
    }

    #[test]
    fn zero_separation_has_zero_information() {
        let f = tone(3, 64);
        let noise = NoiseSpec::new(1.0, f.dt()).unwrap();
        assert_eq!(fisher_exact(&f, 0.0, &noise).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_exact_bound_is_zero() {
        let f = tone(3, 64);
        let scene = ReflectorScene::new(1.0, 0.0, 0.1).unwrap();
        let noise = NoiseSpec::new(0.0, f.dt()).unwrap();
        assert_eq!(crb_l_exact(&f, &scene, &noise), 0.0);
        assert!(fisher_small_l(&f, 0.1, &noise).is_err());
    }
}
