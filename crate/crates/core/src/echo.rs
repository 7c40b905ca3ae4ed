//! Forward models for the return signal.
//!
//! All delays are applied as spectral phase ramps on the circular grid, so
//! they are exact for band-limited pulses provided the pulse stays clear of
//! the grid ends.
//!
//! # Multipath model
//!
//! A pulse splits at a T-junction; one branch reflects straight back, the
//! other runs down a dead-ended stub of round-trip delay `L` and returns
//! to the junction, where a fraction `r` re-enters the stub. Each extra
//! round trip also loses a factor `a`. The received signal is
//!
//! ```text
//! s(t) = sum_{k=0..K} b_k S(t + k L),   b_0 = 1/2,
//! b_1 = (1 - r^2) / 2,   b_k = b_1 (r a)^(k-1),
//! ```
//!
//! where `1 - r^2` is the power transmitted through the junction on the
//! way in and out. `r = 0` leaves the two-term model with `c0 = c1 = 1/2`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::NoiseSpec;
use crate::scalar::{lit, to_f64, Real};
use crate::spectral::{delay_phase, FftPair, Spectrum};
use crate::waveform::SampledWaveform;

/// Largest fraction of the pulse power allowed to wrap around the grid.
pub const SHIFT_POWER_LOSS: f64 = 1e-3;

/// Truncated multipath power fraction above which a warning is raised.
pub const MULTIPATH_TAIL_WARNING: f64 = 1e-6;

/// Imaginary residue below which a waveform is treated as real when
/// adding noise.
const REAL_TOL: f64 = 1e-12;

/// True parameters `(A, x0, l)` of a two-reflector scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectorScene<T> {
    pub a: T,
    pub x0: T,
    pub l: T,
}

impl<T: Real> ReflectorScene<T> {
    pub fn new(a: T, x0: T, l: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::invalid("A", format!("amplitude must be > 0, got {a}")));
        }
        if !x0.is_finite() {
            return Err(Error::invalid("x0", "offset must be finite"));
        }
        if !(l >= T::zero()) || !l.is_finite() {
            return Err(Error::invalid("l", format!("separation must be >= 0, got {l}")));
        }
        Ok(ReflectorScene { a, x0, l })
    }
}

fn check_shift<T: Real>(w: &SampledWaveform<T>, shift: T) -> Result<()> {
    let lost = w.edge_power_fraction(shift.abs());
    if lost > lit(SHIFT_POWER_LOSS) {
        return Err(Error::Truncation {
            shift: to_f64(shift),
            lost_fraction: to_f64(lost),
        });
    }
    Ok(())
}

/// Sum of delayed copies `sum_j c_j w(t - delta_j)`.
fn delayed_sum<T: Real>(w: &SampledWaveform<T>, terms: &[(T, T)]) -> SampledWaveform<T> {
    let plan = FftPair::new(w.len());
    let s = Spectrum::with_plan(w, &plan);
    s.filtered(|k| {
        terms
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &(c, d)| acc + delay_phase(k, d) * c)
    })
    .to_waveform(w, &plan)
}

/// Mean echo `A (f(x - x0 + l/2) + f(x - x0 - l/2)) / 2`. With `normalized`
/// set, `A` is ignored and the result is scaled to unit power.
pub fn two_reflector_echo<T: Real>(
    f: &SampledWaveform<T>,
    scene: &ReflectorScene<T>,
    normalized: bool,
) -> Result<SampledWaveform<T>> {
    let half = lit::<T>(0.5);
    let (lo, hi) = (scene.x0 - scene.l * half, scene.x0 + scene.l * half);
    check_shift(f, if lo.abs() > hi.abs() { lo } else { hi })?;
    let amp = if normalized { T::one() } else { scene.a };
    let echo = delayed_sum(f, &[(amp * half, lo), (amp * half, hi)]);
    if normalized {
        echo.normalized()
    } else {
        Ok(echo)
    }
}

/// `c0 S(t) + c1 S(t + delay)`.
pub fn composite_echo<T: Real>(s: &SampledWaveform<T>, c0: T, c1: T, delay: T) -> Result<SampledWaveform<T>> {
    check_shift(s, delay)?;
    Ok(delayed_sum(s, &[(c0, T::zero()), (c1, -delay)]))
}

/// Adds independent `N(0, sigma2)` noise to every sample. A waveform with a
/// non-negligible imaginary part receives independent noise in each
/// quadrature.
pub fn add_noise<T: Real>(w: &SampledWaveform<T>, noise: &NoiseSpec<T>, seed: u64) -> SampledWaveform<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise_with(w, noise, &mut rng)
}

/// As [`add_noise`], drawing from stream `stream` of the generator seeded
/// with `seed`. Distinct streams give independent noise.
pub fn add_noise_stream<T: Real>(
    w: &SampledWaveform<T>,
    noise: &NoiseSpec<T>,
    seed: u64,
    stream: u64,
) -> SampledWaveform<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    add_noise_with(w, noise, &mut rng)
}

fn add_noise_with<T: Real>(w: &SampledWaveform<T>, noise: &NoiseSpec<T>, rng: &mut ChaCha8Rng) -> SampledWaveform<T> {
    if noise.sigma2.is_zero() {
        return w.clone();
    }
    let sd = to_f64(noise.sigma2.sqrt());
    let complex = w.imaginary_residue() > lit(REAL_TOL);
    let mut draw = || {
        let z: f64 = StandardNormal.sample(rng);
        lit::<T>(sd * z)
    };
    let samples = w
        .samples()
        .iter()
        .map(|&s| {
            let re = draw();
            let im = if complex { draw() } else { T::zero() };
            s + Complex::new(re, im)
        })
        .collect();
    w.with_samples(samples)
}

/// T-junction and dead-ended stub.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableNetwork<T> {
    /// Round-trip delay through the stub.
    pub stub_roundtrip: T,
    /// Junction reflectance seen from the stub, in `(-1, 1)`.
    pub reflectance: T,
    /// Amplitude kept per extra round trip, in `(0, 1]`.
    pub attenuation: T,
    /// Number of stub echoes kept.
    pub terms: usize,
}

impl<T: Real> CableNetwork<T> {
    pub fn new(stub_roundtrip: T, reflectance: T, attenuation: T, terms: usize) -> Result<Self> {
        if !(stub_roundtrip >= T::zero()) || !stub_roundtrip.is_finite() {
            return Err(Error::invalid("stub_roundtrip", "must be finite and >= 0"));
        }
        if !(reflectance.abs() < T::one()) {
            return Err(Error::invalid(
                "reflectance",
                format!("must lie in (-1, 1), got {reflectance}"),
            ));
        }
        if !(attenuation > T::zero() && attenuation <= T::one()) {
            return Err(Error::invalid(
                "attenuation",
                format!("must lie in (0, 1], got {attenuation}"),
            ));
        }
        if terms == 0 {
            return Err(Error::invalid("terms", "at least one stub echo is required"));
        }
        Ok(CableNetwork {
            stub_roundtrip,
            reflectance,
            attenuation,
            terms,
        })
    }

    /// `[b_0, b_1, ..., b_K]`, stopping after `b_1` when `r a = 0`.
    pub fn coefficients(&self) -> Vec<T> {
        let half = lit::<T>(0.5);
        let b1 = half * (T::one() - self.reflectance * self.reflectance);
        let q = self.reflectance * self.attenuation;
        let mut out = vec![half, b1];
        for _ in 1..self.terms {
            if q.is_zero() {
                break;
            }
            let last = *out.last().unwrap_or(&b1);
            out.push(last * q);
        }
        out
    }

    /// Power of the dropped echoes `k > K` relative to the full series.
    pub fn tail_fraction(&self) -> T {
        let half = lit::<T>(0.5);
        let b1 = half * (T::one() - self.reflectance * self.reflectance);
        let q2 = (self.reflectance * self.attenuation).powi(2);
        // sum_{k>=1} b_k^2 = b1^2 / (1 - q^2); the part beyond K is q^(2K) of it.
        let echoes = b1 * b1 / (T::one() - q2);
        let total = half * half + echoes;
        echoes * q2.powi(self.terms as i32) / total
    }
}

/// Multipath return together with its truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathEcho<T> {
    pub signal: SampledWaveform<T>,
    pub coefficients: Vec<T>,
    pub tail_fraction: T,
    pub tail_warning: bool,
}

/// `sum_{k=0..K} b_k S(t + k L)`.
pub fn multipath_echo<T: Real>(s: &SampledWaveform<T>, net: &CableNetwork<T>) -> Result<MultipathEcho<T>> {
    let coefficients = net.coefficients();
    let longest = net.stub_roundtrip * lit::<T>(net.terms as f64);
    check_shift(s, longest)?;
    let terms: Vec<(T, T)> = coefficients
        .iter()
        .enumerate()
        .map(|(k, &b)| (b, -net.stub_roundtrip * lit::<T>(k as f64)))
        .collect();
    let tail_fraction = net.tail_fraction();
    Ok(MultipathEcho {
        signal: delayed_sum(s, &terms),
        tail_warning: tail_fraction > lit(MULTIPATH_TAIL_WARNING),
        tail_fraction,
        coefficients,
    })
}
