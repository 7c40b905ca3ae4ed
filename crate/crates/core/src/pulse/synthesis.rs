use num_complex::Complex;
use rayon::prelude::*;

use crate::band::BandSpec;
use crate::basis::{legendre_norm, spherical_bessel_sequence};
use crate::error::{Error, Result};
use crate::pulse::LegendrePulse;
use crate::scalar::{from_usize, lit, Real};
use crate::waveform::SampledWaveform;

/// Samples per Nyquist interval of the band edge: `dt = pi / (8 k_upper)`.
pub const OVERSAMPLING: f64 = 8.0;

const PARALLEL_MIN: usize = 4096;

/// Time-domain pulse `f(t) = sqrt(2/pi) sum_n c_n sqrt((2n+1)/2) i^n j_n(t)`
/// on the grid `t_start + k dt`, `k < count`. Time is in units of the
/// inverse band edge.
pub fn synthesize_time<T: Real>(
    pulse: &LegendrePulse<T>,
    t_start: T,
    dt: T,
    count: usize,
) -> Result<SampledWaveform<T>> {
    let n_max = pulse.n_terms() - 1;
    let prefactor = (lit::<T>(2.0) / T::PI()).sqrt();
    // c_n sqrt((2n+1)/2) i^n, folded once.
    let weights: Vec<Complex<T>> = pulse
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, &c)| c * i_pow::<T>(n) * (legendre_norm::<T>(n) * prefactor))
        .collect();
    let eval = |k: usize| -> Complex<T> {
        let t = t_start + from_usize::<T>(k) * dt;
        let j = spherical_bessel_sequence(n_max, t);
        weights
            .iter()
            .zip(&j)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (&w, &jn)| acc + w * jn)
    };
    let samples: Vec<Complex<T>> = if count >= PARALLEL_MIN {
        (0..count).into_par_iter().map(eval).collect()
    } else {
        (0..count).map(eval).collect()
    };
    SampledWaveform::new(t_start, dt, samples)
}

fn i_pow<T: Real>(n: usize) -> Complex<T> {
    match n % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// Centred grid for a unit-band Legendre pulse with `dt = pi/8` and a span
/// wide enough that the power beyond it stays below `tail`.
///
/// Far from the origin `|f(t)|^2` averages `(|f(1)|^2 + |f(-1)|^2) / (2 pi t^2)`,
/// so the power outside `[-T, T]` is `edge_weight / (pi T)`.
pub fn legendre_pulse_grid<T: Real>(pulse: &LegendrePulse<T>, tail: T) -> (T, T, usize) {
    let dt = T::PI() / lit(OVERSAMPLING);
    let floor = from_usize::<T>(16 * pulse.n_terms() + 64);
    let half_width = (pulse.edge_weight() / (T::PI() * tail)).max(floor);
    odd_centered_grid(dt, half_width)
}

/// Smallest odd grid centred on `t = 0` that covers `[-half_width, half_width]`,
/// with a length whose only prime factors are 3, 5 and 7.
fn odd_centered_grid<T: Real>(dt: T, half_width: T) -> (T, T, usize) {
    let half = (half_width / dt).ceil().to_usize().unwrap_or(usize::MAX / 4);
    let count = next_odd_smooth(2 * half + 1);
    let half = (count - 1) / 2;
    (-from_usize::<T>(half) * dt, dt, count)
}

fn next_odd_smooth(min: usize) -> usize {
    let mut n = min | 1;
    loop {
        let mut r = n;
        for p in [3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 2;
    }
}

/// Synthesizes `pulse` on [`legendre_pulse_grid`] and renormalizes it to
/// unit power on the grid.
pub fn legendre_waveform<T: Real>(pulse: &LegendrePulse<T>, tail: T) -> Result<SampledWaveform<T>> {
    let (t0, dt, n) = legendre_pulse_grid(pulse, tail);
    synthesize_time(pulse, t0, dt, n)?.normalized()
}

/// Un-normalized sinc-cosine pulse
/// `S(t) = sqrt(k0/pi) sinc(k0 t / d) (cos(k0 t (1 - 1/d)) + 1/sqrt(2))`.
pub fn sinc_cosine_value<T: Real>(d: T, k0: T, t: T) -> T {
    let x = k0 * t / d;
    let sinc = if x.abs() < lit(1e-8) {
        T::one() - x * x / lit(6.0)
    } else {
        x.sin() / x
    };
    (k0 / T::PI()).sqrt() * sinc * ((k0 * t * (T::one() - d.recip())).cos() + T::FRAC_1_SQRT_2())
}

/// Sinc-cosine pulse sampled on the grid and renormalized to unit power.
pub fn sinc_cosine_pulse<T: Real>(d: T, k0: T, t_start: T, dt: T, count: usize) -> Result<SampledWaveform<T>> {
    check_sinc_args(d, k0)?;
    SampledWaveform::from_fn(t_start, dt, count, |t| {
        Complex::new(sinc_cosine_value(d, k0, t), T::zero())
    })?
    .normalized()
}

fn check_sinc_args<T: Real>(d: T, k0: T) -> Result<()> {
    if !(d > T::one()) {
        return Err(Error::invalid("d", format!("must exceed 1 to keep the band edge at k0, got {d}")));
    }
    if !(k0 > T::zero()) {
        return Err(Error::invalid("k0", format!("band edge must be positive, got {k0}")));
    }
    Ok(())
}

/// Centred grid for the sinc-cosine pulse. The tail `|S|^2 ~ d^2 / (2 pi k0 t^2)`
/// against a total power of about `d` gives a relative tail `d / (pi k0 T)`.
pub fn sinc_cosine_grid<T: Real>(d: T, k0: T, tail: T) -> Result<(T, T, usize)> {
    check_sinc_args(d, k0)?;
    let dt = T::PI() / (lit::<T>(OVERSAMPLING) * k0);
    let half_width = (d / (T::PI() * k0 * tail)).max(lit::<T>(64.0) * d / k0);
    Ok(odd_centered_grid(dt, half_width))
}

/// Sinc-cosine pulse sampled on [`sinc_cosine_grid`].
pub fn sinc_cosine_waveform<T: Real>(d: T, k0: T, tail: T) -> Result<SampledWaveform<T>> {
    let (t0, dt, n) = sinc_cosine_grid(d, k0, tail)?;
    sinc_cosine_pulse(d, k0, t0, dt, n)
}

/// Exact `R` of the continuous sinc-cosine pulse.
///
/// Its spectrum is three rectangles of half-width `1/d` (in units of `k0`)
/// and heights `1/2, 1/sqrt(2), 1/2`, centred at `-(1 - 1/d), 0, 1 - 1/d`.
/// The density is piecewise constant, so the moments integrate exactly.
pub fn sinc_cosine_resolving_power<T: Real>(d: T) -> Result<T> {
    check_sinc_args(d, T::one())?;
    let w = d.recip();
    let c = T::one() - w;
    let rects = [(-c, lit::<T>(0.5)), (T::zero(), T::FRAC_1_SQRT_2()), (c, lit::<T>(0.5))];
    let mut breaks: Vec<T> = rects.iter().flat_map(|&(m, _)| [m - w, m + w]).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let mut moments = [T::zero(); 3];
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let mid = (a + b) / lit(2.0);
        let amp: T = rects
            .iter()
            .filter(|&&(m, _)| (mid - m).abs() < w)
            .map(|&(_, h)| h)
            .sum();
        let dens = amp * amp;
        for (slot, p) in moments.iter_mut().zip([0, 2, 4]) {
            let q = from_usize::<T>(p + 1);
            *slot = *slot + dens * (b.powi(p as i32 + 1) - a.powi(p as i32 + 1)) / q;
        }
    }
    let u2 = moments[1] / moments[0];
    let u4 = moments[2] / moments[0];
    Ok(lit::<T>(4.0) * (u4 - u2 * u2))
}

/// Maps a unit-band waveform onto `band`: `g(t) = f(t dk/2) exp(i kbar t)`,
/// scaled by `sqrt(dk/2)` so unit power is preserved.
pub fn shift_band<T: Real>(w: &SampledWaveform<T>, band: &BandSpec<T>) -> Result<SampledWaveform<T>> {
    let stretch = lit::<T>(2.0) / band.bandwidth();
    let amp = stretch.recip().sqrt();
    let center = band.center();
    let t_start = w.t_start() * stretch;
    let dt = w.dt() * stretch;
    let samples = w
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let t = t_start + from_usize::<T>(k) * dt;
            let (sin, cos) = (center * t).sin_cos();
            s * Complex::new(cos, sin) * amp
        })
        .collect();
    SampledWaveform::new(t_start, dt, samples)
}
