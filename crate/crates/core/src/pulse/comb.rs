use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::band::BandSpec;
use crate::error::Result;
use crate::scalar::{lit, Real};
use crate::waveform::SampledWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tooth<T> {
    pub k: T,
    pub amplitude: T,
}

/// The non-normalizable wave that maximizes `Var[p^2]` inside a band: an
/// equal superposition of the smallest-`k^2` and largest-`k^2` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombDesign<T> {
    pub band: BandSpec<T>,
    pub teeth: Vec<Tooth<T>>,
    /// Analytic maximum `Var[p^2]`.
    pub max_variance: T,
}

/// Optimal wave for `band`.
///
/// * symmetric `[-k0, k0]`: teeth `(-k0, 1/2), (0, 1/sqrt 2), (k0, 1/2)`,
///   variance `k0^4 / 4`;
/// * one-sided `[k1, k2]`: teeth at both edges with weight `1/sqrt 2`,
///   variance `dk^2 kbar^2`;
/// * asymmetric but straddling zero: the DC tooth and the edge with the
///   larger `|k|`, variance `edge^4 / 4`.
pub fn optimal_wave_comb<T: Real>(band: &BandSpec<T>) -> CombDesign<T> {
    let half = lit::<T>(0.5);
    let s = T::FRAC_1_SQRT_2();
    let (k1, k2) = (band.k_lower(), band.k_upper());
    let quarter = lit::<T>(0.25);
    let (teeth, max_variance) = if band.is_symmetric() {
        let k0 = band.edge();
        (
            vec![
                Tooth { k: -k0, amplitude: half },
                Tooth { k: T::zero(), amplitude: s },
                Tooth { k: k0, amplitude: half },
            ],
            quarter * k0.powi(4),
        )
    } else if k1 >= T::zero() || k2 <= T::zero() {
        let dk = band.bandwidth();
        let kbar = band.center();
        (
            vec![Tooth { k: k1, amplitude: s }, Tooth { k: k2, amplitude: s }],
            dk * dk * kbar * kbar,
        )
    } else {
        let edge = if k2.abs() >= k1.abs() { k2 } else { k1 };
        let mut teeth = vec![Tooth { k: T::zero(), amplitude: s }, Tooth { k: edge, amplitude: s }];
        teeth.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap_or(std::cmp::Ordering::Equal));
        (teeth, quarter * edge.powi(4))
    };
    CombDesign {
        band: *band,
        teeth,
        max_variance,
    }
}

impl<T: Real> CombDesign<T> {
    /// `<k^4> - <k^2>^2` straight from the tooth weights.
    pub fn teeth_variance(&self) -> T {
        let total: T = self.teeth.iter().map(|t| t.amplitude * t.amplitude).sum();
        let m = |p: i32| -> T {
            self.teeth
                .iter()
                .map(|t| t.amplitude * t.amplitude * t.k.powi(p))
                .sum::<T>()
                / total
        };
        let k2 = m(2);
        m(4) - k2 * k2
    }

    /// `sum a_j exp(i k_j t)` on the grid, normalized to unit power.
    ///
    /// The wave is periodic only if the grid spans whole periods of every
    /// tooth; pick `dt` and `count` accordingly for exact spectral lines.
    pub fn sample(&self, t_start: T, dt: T, count: usize) -> Result<SampledWaveform<T>> {
        SampledWaveform::from_fn(t_start, dt, count, |t| {
            self.teeth.iter().fold(Complex::new(T::zero(), T::zero()), |acc, tooth| {
                let (s, c) = (tooth.k * t).sin_cos();
                acc + Complex::new(c, s) * tooth.amplitude
            })
        })?
        .normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_comb() {
        let c = optimal_wave_comb(&BandSpec::symmetric(1.0_f64).unwrap());
        assert_eq!(c.teeth.len(), 3);
        assert_eq!(c.max_variance, 0.25);
        assert!((c.teeth_variance() - 0.25).abs() < 1e-15);
        let c2 = optimal_wave_comb(&BandSpec::symmetric(3.0_f64).unwrap());
        assert!((c2.max_variance - 81.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_comb() {
        let b = BandSpec::new(2.0_f64, 5.0).unwrap();
        let c = optimal_wave_comb(&b);
        assert_eq!(c.teeth.len(), 2);
        assert!((c.max_variance - 9.0 * 12.25).abs() < 1e-12);
        assert!((c.teeth_variance() - c.max_variance).abs() < 1e-12);
    }

    #[test]
    fn narrow_band_has_vanishing_variance() {
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let c = optimal_wave_comb(&BandSpec::new(1.0_f64, 1.0 + eps).unwrap());
            assert!(c.max_variance < last);
            last = c.max_variance;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn straddling_asymmetric_band_keeps_dc() {
        let c = optimal_wave_comb(&BandSpec::new(-1.0_f64, 2.0).unwrap());
        assert_eq!(c.teeth[0].k, 0.0);
        assert_eq!(c.teeth[1].k, 2.0);
        assert!((c.max_variance - 4.0).abs() < 1e-15);
        assert!((c.teeth_variance() - 4.0).abs() < 1e-14);
    }
}
