use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Wavenumber interval `[k_lower, k_upper]` holding all spectral weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec<T> {
    k_lower: T,
    k_upper: T,
}

impl<T: Real> BandSpec<T> {
    pub fn new(k_lower: T, k_upper: T) -> Result<Self> {
        if !k_lower.is_finite() || !k_upper.is_finite() {
            return Err(Error::invalid("band", "band edges must be finite"));
        }
        if !(k_upper > k_lower) {
            return Err(Error::invalid(
                "band",
                format!("k_upper ({k_upper}) must exceed k_lower ({k_lower})"),
            ));
        }
        Ok(BandSpec { k_lower, k_upper })
    }

    /// `[-k0, k0]`.
    pub fn symmetric(k0: T) -> Result<Self> {
        Self::new(-k0, k0)
    }

    /// The dimensionless band `[-1, 1]`.
    pub fn unit() -> Self {
        BandSpec {
            k_lower: -T::one(),
            k_upper: T::one(),
        }
    }

    pub fn k_lower(&self) -> T {
        self.k_lower
    }

    pub fn k_upper(&self) -> T {
        self.k_upper
    }

    pub fn bandwidth(&self) -> T {
        self.k_upper - self.k_lower
    }

    pub fn center(&self) -> T {
        (self.k_upper + self.k_lower) / lit(2.0)
    }

    pub fn half_width(&self) -> T {
        self.bandwidth() / lit(2.0)
    }

    /// Largest `|k|` in the band.
    pub fn edge(&self) -> T {
        self.k_upper.abs().max(self.k_lower.abs())
    }

    pub fn is_symmetric(&self) -> bool {
        (self.k_lower + self.k_upper).abs() <= self.edge() * lit(1e-12)
    }

    pub fn contains(&self, k: T) -> bool {
        k >= self.k_lower && k <= self.k_upper
    }

    /// Maps `k` in the band onto `u` in `[-1, 1]`.
    pub fn to_unit(&self, k: T) -> T {
        (k - self.center()) / self.half_width()
    }
}
