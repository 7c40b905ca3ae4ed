//! Pulse design: the optimal frequency comb, finite-energy pulses built from
//! scaled Legendre spectra, the sinc-cosine pulse, and the resolving-power
//! figure of merit `R = 4 Var[p^2] / k0^4`.
//!
//! A Legendre pulse has spectrum `f(u) = sum_n c_n sqrt((2n+1)/2) P_n(u)` on
//! the unit band. Its `<u^2>` is the quadratic form `c^T U2 c` with the
//! moment matrix `U2`, so the variance of `u^2` is maximized by the equal
//! superposition of the extreme eigenvectors of `U2`, giving
//! `R = (lambda_max - lambda_min)^2`.

mod comb;
mod figure;
mod synthesis;

pub use comb::{optimal_wave_comb, CombDesign, Tooth};
pub use figure::{
    band_moments, resolving_power, teeth_resolving_power, ResolvingPower, SpectralMoments,
    LEAKAGE_WARNING_FRACTION,
};
pub use synthesis::{
    legendre_pulse_grid, legendre_waveform, shift_band, sinc_cosine_grid, sinc_cosine_pulse, sinc_cosine_resolving_power,
    sinc_cosine_value, sinc_cosine_waveform, synthesize_time, OVERSAMPLING,
};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::{default_order_for_degree, gauss_legendre, legendre_norm, legendre_unchecked};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, EigenResult, Matrix};
use crate::scalar::{lit, to_f64, Real};

/// Tolerance on `sum |c_n|^2 = 1`.
pub const COEFF_NORM_TOL: f64 = 1e-10;

/// Extreme eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Coefficients `c_0..c_{N-1}` over the orthonormal Legendre basis of the
/// unit band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendrePulse<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> LegendrePulse<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("coeffs", "need at least one coefficient"));
        }
        let norm: T = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - T::one()).abs() > lit(COEFF_NORM_TOL) {
            return Err(Error::invalid(
                "coeffs",
                format!("sum |c_n|^2 = {norm}, expected 1"),
            ));
        }
        Ok(LegendrePulse { coeffs })
    }

    pub fn from_real(coeffs: &[T]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    /// Rescales arbitrary (nonzero) coefficients to unit norm.
    pub fn normalizing(coeffs: Vec<Complex<T>>) -> Result<Self> {
        let norm: T = coeffs.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(Error::invalid("coeffs", "all coefficients are zero"));
        }
        Self::new(coeffs.into_iter().map(|c| c / norm).collect())
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Truncation `N`.
    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Spectral amplitude at `u` in `[-1, 1]`.
    pub fn spectrum_at(&self, u: T) -> Result<Complex<T>> {
        if u.abs() > T::one() {
            return Err(Error::Domain {
                name: "u",
                value: to_f64(u),
                domain: "[-1, 1]",
            });
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (n, &c)| {
                acc + c * (legendre_norm::<T>(n) * legendre_unchecked(n, u))
            }))
    }

    /// `|f(1)|^2 + |f(-1)|^2`; sets the `1/t^2` tail of the time-domain pulse.
    pub fn edge_weight(&self) -> T {
        let hi = self.spectrum_at(T::one()).map(|c| c.norm_sqr()).unwrap_or_else(|_| T::zero());
        let lo = self.spectrum_at(-T::one()).map(|c| c.norm_sqr()).unwrap_or_else(|_| T::zero());
        hi + lo
    }

    /// True when only even-index (or only odd-index) coefficients are nonzero.
    pub fn parity(&self, tol: T) -> Parity {
        let re: Vec<T> = self.coeffs.iter().map(|c| c.norm()).collect();
        parity_of(&re, tol)
    }
}

/// Which Legendre indices carry weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

pub fn parity_of<T: Real>(v: &[T], tol: T) -> Parity {
    let odd = v.iter().skip(1).step_by(2).fold(T::zero(), |m, x| m.max(x.abs()));
    let even = v.iter().step_by(2).fold(T::zero(), |m, x| m.max(x.abs()));
    match (even > tol, odd > tol) {
        (_, false) => Parity::Even,
        (false, true) => Parity::Odd,
        (true, true) => Parity::Mixed,
    }
}

/// Which power of `u` a moment matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentPower {
    /// `u`: tridiagonal; optimizing it targets `Var[p]` for shifted bands.
    First,
    /// `u^2`: pentadiagonal; optimizing it targets `Var[p^2]`.
    Second,
}

impl MomentPower {
    pub fn exponent(self) -> usize {
        match self {
            MomentPower::First => 1,
            MomentPower::Second => 2,
        }
    }

    pub fn from_exponent(p: usize) -> Result<Self> {
        match p {
            1 => Ok(MomentPower::First),
            2 => Ok(MomentPower::Second),
            _ => Err(Error::invalid("power", format!("must be 1 or 2, got {p}"))),
        }
    }
}

/// `(n, m) -> sqrt((2n+1)/2) sqrt((2m+1)/2) integral P_n P_m u^power du`.
///
/// Entries with `|n - m| > power` or `n + m + power` odd vanish by
/// orthogonality and parity and are left at exactly zero.
pub fn moment_matrix<T: Real>(n: usize, power: MomentPower) -> Result<Matrix<T>> {
    if n == 0 {
        return Err(Error::invalid("N", "moment matrix needs N >= 1"));
    }
    let p = power.exponent();
    let rule = gauss_legendre::<T>(default_order_for_degree(2 * n))?;
    let table: Vec<Vec<T>> = (0..n)
        .map(|k| {
            rule.nodes()
                .iter()
                .map(|&u| legendre_norm::<T>(k) * legendre_unchecked(k, u))
                .collect()
        })
        .collect();
    let weighted: Vec<T> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&u, &w)| w * u.powi(p as i32))
        .collect();

    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            if j - i > p || (i + j + p) % 2 == 1 {
                continue;
            }
            let v: T = weighted
                .iter()
                .enumerate()
                .map(|(q, &w)| w * table[i][q] * table[j][q])
                .sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Result of the eigenvector construction `c = (v_max + v_min) / sqrt(2)`.
#[derive(Debug, Clone)]
pub struct OptimizedPulse<T> {
    pub pulse: LegendrePulse<T>,
    pub power: MomentPower,
    /// `R = (lambda_max - lambda_min)^2` for [`MomentPower::Second`]; the
    /// achieved `<u^2>` for [`MomentPower::First`].
    pub figure: T,
    pub lambda_min: T,
    pub lambda_max: T,
    pub v_min: Vec<T>,
    pub v_max: Vec<T>,
    pub eigen: EigenResult<T>,
    pub degenerate_max: bool,
    pub degenerate_min: bool,
}

/// Maximizes the variance of `u^power` over pulses with `N` Legendre terms.
pub fn optimize_pulse<T: Real>(n: usize, power: MomentPower) -> Result<OptimizedPulse<T>> {
    let m = moment_matrix::<T>(n, power)?;
    let eigen = symmetric_eigen(&m)?;
    let tol: T = lit(DEGENERACY_TOL);
    let lambda_min = eigen.values[0];
    let lambda_max = eigen.values[n - 1];

    let max_idx: Vec<usize> = (0..n).filter(|&k| eigen.values[k] >= lambda_max - tol).collect();
    let min_idx: Vec<usize> = (0..n).filter(|&k| eigen.values[k] <= lambda_min + tol).collect();
    let v_max = pick_eigenvector(&eigen, &max_idx);
    let v_min = pick_eigenvector(&eigen, &min_idx);

    let single = lambda_max - lambda_min <= tol;
    let coeffs: Vec<Complex<T>> = if single {
        v_max.iter().map(|&x| Complex::new(x, T::zero())).collect()
    } else {
        let s = T::FRAC_1_SQRT_2();
        v_max
            .iter()
            .zip(&v_min)
            .map(|(&a, &b)| Complex::new((a + b) * s, T::zero()))
            .collect()
    };
    let pulse = LegendrePulse::normalizing(coeffs)?;

    let figure = match power {
        MomentPower::Second => (lambda_max - lambda_min).powi(2),
        MomentPower::First => {
            let u2 = moment_matrix::<T>(n, MomentPower::Second)?;
            let c: Vec<T> = pulse.coeffs().iter().map(|c| c.re).collect();
            u2.quadratic_form(&c)
        }
    };

    Ok(OptimizedPulse {
        pulse,
        power,
        figure,
        lambda_min,
        lambda_max,
        v_min,
        v_max,
        degenerate_max: !single && max_idx.len() > 1,
        degenerate_min: !single && min_idx.len() > 1,
        eigen,
    })
}

/// Among candidate eigenvectors, the one with the largest magnitude at the
/// lowest Legendre index where any candidate is nonzero; sign fixed so that
/// its first nonzero component is positive.
fn pick_eigenvector<T: Real>(eigen: &EigenResult<T>, candidates: &[usize]) -> Vec<T> {
    let tiny: T = lit(1e-12);
    let vectors: Vec<Vec<T>> = candidates.iter().map(|&k| eigen.vector(k)).collect();
    let mut chosen = vectors[0].clone();
    if vectors.len() > 1 {
        let len = chosen.len();
        if let Some(idx) = (0..len).find(|&i| vectors.iter().any(|v| v[i].abs() > tiny)) {
            chosen = vectors
                .iter()
                .max_by(|a, b| {
                    a[idx]
                        .abs()
                        .partial_cmp(&b[idx].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .cloned()
                .unwrap_or(chosen);
        }
    }
    if let Some(first) = chosen.iter().find(|x| x.abs() > tiny) {
        if *first < T::zero() {
            for x in chosen.iter_mut() {
                *x = -*x;
            }
        }
    }
    chosen
}

/// `(N, R(N))` for `N = 2..=n_max`.
pub fn r_vs_n_curve<T: Real>(n_max: usize) -> Result<Vec<(usize, T)>> {
    if n_max < 2 {
        return Err(Error::invalid("N_max", "curve needs N_max >= 2"));
    }
    (2..=n_max)
        .map(|n| optimize_pulse::<T>(n, MomentPower::Second).map(|o| (n, o.figure)))
        .collect()
}
