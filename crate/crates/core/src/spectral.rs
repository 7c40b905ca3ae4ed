//! DFT plumbing: spectra of sampled waveforms, exact fractional shifts and
//! derivatives by spectral multiplication, and Parseval inner products.
//!
//! Bin `m` of an `n`-point transform with step `dt` sits at wavenumber
//! `2 pi m' / (n dt)` where `m' = m` for `m < n/2` and `m - n` otherwise
//! (the Nyquist bin of an even transform is taken as negative). A sampled
//! waveform is treated as one period of its trigonometric interpolant, so
//! shifts are circular and exactly invertible.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{from_usize, Real};
use crate::waveform::SampledWaveform;

/// Forward/inverse plans for one transform length.
#[derive(Clone)]
pub struct FftPair<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> FftPair<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, samples: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, bins: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = bins.to_vec();
        self.inverse.process(&mut buf);
        let scale = from_usize::<T>(self.len).recip();
        for b in buf.iter_mut() {
            *b = *b * scale;
        }
        buf
    }
}

/// Signed wavenumber of every DFT bin.
pub fn wavenumbers<T: Real>(n: usize, dt: T) -> Vec<T> {
    let step = T::TAU() / (from_usize::<T>(n) * dt);
    (0..n)
        .map(|m| {
            if 2 * m < n {
                from_usize::<T>(m) * step
            } else {
                -from_usize::<T>(n - m) * step
            }
        })
        .collect()
}

/// DFT of a waveform together with its wavenumber axis.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub bins: Vec<Complex<T>>,
    pub k: Vec<T>,
    pub dt: T,
}

impl<T: Real> Spectrum<T> {
    pub fn of(w: &SampledWaveform<T>) -> Self {
        Self::with_plan(w, &FftPair::new(w.len()))
    }

    pub fn with_plan(w: &SampledWaveform<T>, plan: &FftPair<T>) -> Self {
        Spectrum {
            bins: plan.forward(w.samples()),
            k: wavenumbers(w.len(), w.dt()),
            dt: w.dt(),
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// `sum |X_m|^2`, proportional to the waveform power.
    pub fn total_weight(&self) -> T {
        self.bins.iter().map(|b| b.norm_sqr()).sum()
    }

    /// `<k^p>` under the normalized spectral density `|X_m|^2`.
    pub fn moment(&self, p: i32) -> T {
        let total = self.total_weight();
        self.bins
            .iter()
            .zip(&self.k)
            .map(|(b, &k)| b.norm_sqr() * k.powi(p))
            .sum::<T>()
            / total
    }

    /// `Re integral a(t) conj(b(t)) dt` via Parseval.
    pub fn inner(&self, other: &Self) -> T {
        self.bins
            .iter()
            .zip(&other.bins)
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<T>()
            * self.dt
            / from_usize::<T>(self.len())
    }

    /// `Re integral a^(p)(t) conj(b^(q)(t)) dt` without materializing derivatives.
    pub fn inner_derivatives(&self, p: u32, other: &Self, q: u32) -> T {
        let scale = self.dt / from_usize::<T>(self.len());
        self.bins
            .iter()
            .zip(&other.bins)
            .zip(&self.k)
            .map(|((a, b), &k)| {
                let da = *a * ik_pow(k, p);
                let db = *b * ik_pow(k, q);
                (da * db.conj()).re
            })
            .sum::<T>()
            * scale
    }

    /// Multiplies bin `m` by `g(k_m)`.
    pub fn filtered<F: Fn(T) -> Complex<T>>(&self, g: F) -> Self {
        Spectrum {
            bins: self.bins.iter().zip(&self.k).map(|(&b, &k)| b * g(k)).collect(),
            k: self.k.clone(),
            dt: self.dt,
        }
    }

    /// Back to the time domain on the grid of `like`.
    pub fn to_waveform(&self, like: &SampledWaveform<T>, plan: &FftPair<T>) -> SampledWaveform<T> {
        like.with_samples(plan.inverse(&self.bins))
    }
}

/// `(i k)^p`.
pub fn ik_pow<T: Real>(k: T, p: u32) -> Complex<T> {
    let mag = k.powi(p as i32);
    match p % 4 {
        0 => Complex::new(mag, T::zero()),
        1 => Complex::new(T::zero(), mag),
        2 => Complex::new(-mag, T::zero()),
        _ => Complex::new(T::zero(), -mag),
    }
}

/// Phase factor `exp(-i k delta)` that delays a signal by `delta`.
#[inline]
pub fn delay_phase<T: Real>(k: T, delta: T) -> Complex<T> {
    let (s, c) = (k * delta).sin_cos();
    Complex::new(c, -s)
}

/// `exp(i k_m tau)` for every bin `m` in DFT order, generated by repeated
/// multiplication and re-seeded exactly every 256 bins.
pub struct PhaseRamp<T> {
    n: usize,
    m: usize,
    step: Complex<T>,
    theta: T,
    current: Complex<T>,
}

const RESEED: usize = 256;

impl<T: Real> PhaseRamp<T> {
    pub fn new(n: usize, dt: T, tau: T) -> Self {
        let theta = T::TAU() / (from_usize::<T>(n) * dt) * tau;
        let (s, c) = theta.sin_cos();
        PhaseRamp {
            n,
            m: 0,
            step: Complex::new(c, s),
            theta,
            current: Complex::new(T::one(), T::zero()),
        }
    }

    fn signed(&self, m: usize) -> T {
        if 2 * m < self.n {
            from_usize::<T>(m)
        } else {
            -from_usize::<T>(self.n - m)
        }
    }
}

impl<T: Real> Iterator for PhaseRamp<T> {
    type Item = Complex<T>;

    fn next(&mut self) -> Option<Complex<T>> {
        if self.m >= self.n {
            return None;
        }
        let m = self.m;
        if m.is_multiple_of(RESEED) || 2 * m == self.n || 2 * m == self.n + 1 {
            let (s, c) = (self.signed(m) * self.theta).sin_cos();
            self.current = Complex::new(c, s);
        }
        let out = self.current;
        self.current = self.current * self.step;
        self.m += 1;
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.n - self.m;
        (left, Some(left))
    }
}

impl<T: Real> ExactSizeIterator for PhaseRamp<T> {}

/// `w(t - delta)` for any real `delta` (circular, band-limited interpolation).
pub fn shift<T: Real>(w: &SampledWaveform<T>, delta: T) -> SampledWaveform<T> {
    let plan = FftPair::new(w.len());
    let mut spec = Spectrum::with_plan(w, &plan);
    for (b, p) in spec.bins.iter_mut().zip(PhaseRamp::new(w.len(), w.dt(), -delta)) {
        *b = *b * p;
    }
    spec.to_waveform(w, &plan)
}

/// `d^order w / dt^order` computed spectrally.
pub fn derivative<T: Real>(w: &SampledWaveform<T>, order: u32) -> SampledWaveform<T> {
    let plan = FftPair::new(w.len());
    Spectrum::with_plan(w, &plan)
        .filtered(|k| ik_pow(k, order))
        .to_waveform(w, &plan)
}

/// Power spectrum of `w` zero-padded to at least `pad_factor * len` points
/// (rounded up to a power of two): `(k, |X(k)|^2)` with the weights summing
/// to one.
pub fn padded_power_spectrum<T: Real>(w: &SampledWaveform<T>, pad_factor: usize) -> (Vec<T>, Vec<T>) {
    let n = (w.len() * pad_factor.max(1)).next_power_of_two();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    buf[..w.len()].copy_from_slice(w.samples());
    let plan = FftPair::new(n);
    let bins = plan.forward(&buf);
    let mut power: Vec<T> = bins.iter().map(|b| b.norm_sqr()).collect();
    let total: T = power.iter().copied().sum();
    if total > T::zero() {
        for p in power.iter_mut() {
            *p = *p / total;
        }
    }
    (wavenumbers(n, w.dt()), power)
}
