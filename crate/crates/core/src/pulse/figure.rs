use serde::{Deserialize, Serialize};

use crate::band::BandSpec;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::spectral::padded_power_spectrum;
use crate::waveform::SampledWaveform;

/// Out-of-band power fraction above which results carry a warning.
pub const LEAKAGE_WARNING_FRACTION: f64 = 0.01;

/// Zero-padding applied before taking moments.
const PAD_FACTOR: usize = 4;

/// Moments of `u = (k - center) / half_width` over the in-band part of the
/// spectrum, plus the fraction of power that fell outside the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments<T> {
    pub mean_u: T,
    pub u2: T,
    pub u4: T,
    pub leakage: T,
}

impl<T: Real> SpectralMoments<T> {
    /// `Var[u] = <u^2> - <u>^2`.
    pub fn var_u(&self) -> T {
        self.u2 - self.mean_u * self.mean_u
    }

    /// `Var[u^2] = <u^4> - <u^2>^2`.
    pub fn var_u2(&self) -> T {
        self.u4 - self.u2 * self.u2
    }
}

pub fn band_moments<T: Real>(w: &SampledWaveform<T>, band: &BandSpec<T>) -> Result<SpectralMoments<T>> {
    w.require_normalized()?;
    let (k, power) = padded_power_spectrum(w, PAD_FACTOR);
    let limit = T::one() + lit(1e-9);
    let mut acc = [T::zero(); 4];
    for (&k, &p) in k.iter().zip(&power) {
        let u = band.to_unit(k);
        if u.abs() <= limit {
            let u2 = u * u;
            acc[0] = acc[0] + p;
            acc[1] = acc[1] + p * u;
            acc[2] = acc[2] + p * u2;
            acc[3] = acc[3] + p * u2 * u2;
        }
    }
    if !(acc[0] > T::zero()) {
        return Err(Error::invalid("waveform", "no spectral power inside the band"));
    }
    Ok(SpectralMoments {
        mean_u: acc[1] / acc[0],
        u2: acc[2] / acc[0],
        u4: acc[3] / acc[0],
        leakage: T::one() - acc[0],
    })
}

/// `R = 4 (<u^4> - <u^2>^2)` with `u = k / k_upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvingPower<T> {
    pub r: T,
    pub moments: SpectralMoments<T>,
    /// Set when more than 1% of the power lies outside the band.
    pub leakage_warning: bool,
}

/// Resolving power of a normalized waveform whose band is `[-k0, k0]`,
/// taken from its zero-padded DFT.
pub fn resolving_power<T: Real>(w: &SampledWaveform<T>, band: &BandSpec<T>) -> Result<ResolvingPower<T>> {
    if !band.is_symmetric() {
        return Err(Error::invalid(
            "band",
            "resolving power is defined for a symmetric band [-k0, k0]",
        ));
    }
    let moments = band_moments(w, band)?;
    Ok(ResolvingPower {
        r: lit::<T>(4.0) * moments.var_u2(),
        leakage_warning: moments.leakage > lit(LEAKAGE_WARNING_FRACTION),
        moments,
    })
}

/// `R` of a point spectrum given as `(u, weight)` pairs. Weights are
/// renormalized to sum to one.
pub fn teeth_resolving_power<T: Real>(teeth: &[(T, T)]) -> T {
    let total: T = teeth.iter().map(|&(_, w)| w).sum();
    let u2: T = teeth.iter().map(|&(u, w)| w * u * u).sum::<T>() / total;
    let u4: T = teeth.iter().map(|&(u, w)| w * u.powi(4)).sum::<T>() / total;
    lit::<T>(4.0) * (u4 - u2 * u2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comb_is_the_bound() {
        let r: f64 = teeth_resolving_power(&[(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_spectrum_has_zero_r() {
        assert_eq!(teeth_resolving_power(&[(1.0_f64, 1.0)]), 0.0);
    }

    #[test]
    fn asymmetric_band_rejected() {
        let w = SampledWaveform::from_real(0.0, 1.0_f64, &[1.0, 0.0]).unwrap();
        let band = BandSpec::new(0.5, 1.0).unwrap();
        assert!(resolving_power(&w, &band).is_err());
    }

    #[test]
    fn unnormalized_rejected() {
        let w = SampledWaveform::from_real(0.0, 1.0_f64, &[1.0, 1.0]).unwrap();
        assert!(matches!(
            resolving_power(&w, &BandSpec::unit()),
            Err(Error::NotNormalized { .. })
        ));
    }
}
