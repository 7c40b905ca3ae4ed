use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Tolerance on `sum |s_k|^2 dt = 1` for a waveform to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Uniformly sampled complex signal, `samples[k]` taken at `t_start + k dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform<T> {
    t_start: T,
    dt: T,
    samples: Vec<Complex<T>>,
}

impl<T: Real> SampledWaveform<T> {
    pub fn new(t_start: T, dt: T, samples: Vec<Complex<T>>) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("time step must be positive, got {dt}")));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        if samples.len() < 2 {
            return Err(Error::invalid("samples", "need at least two samples"));
        }
        Ok(SampledWaveform {
            t_start,
            dt,
            samples,
        })
    }

    pub fn from_real(t_start: T, dt: T, samples: &[T]) -> Result<Self> {
        Self::new(
            t_start,
            dt,
            samples.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        )
    }

    pub fn from_fn<F: FnMut(T) -> Complex<T>>(t_start: T, dt: T, count: usize, mut f: F) -> Result<Self> {
        let samples = (0..count)
            .map(|k| f(t_start + from_usize::<T>(k) * dt))
            .collect();
        Self::new(t_start, dt, samples)
    }

    /// Grid of `count` samples centred on zero: `t_k = (k - (count-1)/2) dt`.
    pub fn centered_grid(dt: T, count: usize) -> (T, T, usize) {
        let t_start = -from_usize::<T>(count.saturating_sub(1)) * dt / lit(2.0);
        (t_start, dt, count)
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        SampledWaveform {
            t_start: self.t_start,
            dt: self.dt,
            samples,
        }
    }

    pub fn t_start(&self) -> T {
        self.t_start
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn time(&self, k: usize) -> T {
        self.t_start + from_usize::<T>(k) * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Total time span covered by the samples, `len * dt`.
    pub fn duration(&self) -> T {
        from_usize::<T>(self.len()) * self.dt
    }

    /// `sum_k |s_k|^2 dt`.
    pub fn power(&self) -> T {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<T>() * self.dt
    }

    pub fn is_normalized(&self) -> bool {
        (self.power() - T::one()).abs() <= lit(NORMALIZATION_TOL)
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                power: to_f64(self.power()),
            })
        }
    }

    /// Copy rescaled to unit power.
    pub fn normalized(&self) -> Result<Self> {
        let p = self.power();
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::invalid("waveform", "cannot normalize a zero-power waveform"));
        }
        Ok(self.scaled(p.sqrt().recip()))
    }

    pub fn scaled(&self, c: T) -> Self {
        self.with_samples(self.samples.iter().map(|&s| s * c).collect())
    }

    /// Largest imaginary component relative to the largest magnitude.
    pub fn imaginary_residue(&self) -> T {
        let peak = self.samples.iter().fold(T::zero(), |m, s| m.max(s.norm()));
        if peak.is_zero() {
            return T::zero();
        }
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.im.abs())) / peak
    }

    pub fn is_real(&self, tol: T) -> bool {
        self.imaginary_residue() <= tol
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.re).collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        let tol = self.dt * lit(1e-9);
        self.len() == other.len()
            && (self.dt - other.dt).abs() <= tol
            && (self.t_start - other.t_start).abs() <= tol
    }

    pub(crate) fn require_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Fraction of the power held by the `margin`-wide strips at both ends.
    /// Only whole samples count, so a sub-sample margin loses nothing.
    pub fn edge_power_fraction(&self, margin: T) -> T {
        let total = self.power();
        if total.is_zero() {
            return T::zero();
        }
        let m = (margin.abs() / self.dt).floor().to_usize().unwrap_or(usize::MAX).min(self.len() / 2);
        let head: T = self.samples[..m].iter().map(|s| s.norm_sqr()).sum();
        let tail: T = self.samples[self.len() - m..].iter().map(|s| s.norm_sqr()).sum();
        (head + tail) * self.dt / total
    }

    /// Sample-wise `self + c * other` on a shared grid.
    pub fn add_scaled(&self, c: T, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| a + b * c)
                .collect(),
        ))
    }

    /// `max_k |a_k - b_k|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// `sqrt(sum |s_k|^2 dt)`.
    pub fn l2_norm(&self) -> T {
        self.power().sqrt()
    }

    /// Real inner product `Re sum a_k conj(b_k) dt`.
    pub fn inner(&self, other: &Self) -> T {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<T>()
            * self.dt
    }
}
