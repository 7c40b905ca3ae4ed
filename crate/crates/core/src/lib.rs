//! Band-limited ranging pulses that maximize the information on the
//! separation of two closely spaced reflectors.
//!
//! The numerical core is generic over the scalar (`f32` or `f64`); the
//! aliases below fix it to `f64`.

// Negated comparisons are how NaN inputs get rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod basis;
pub mod echo;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod harness;
pub mod linalg;
pub mod pulse;
pub mod scalar;
pub mod spectral;
pub mod waveform;

pub use error::{Error, Result};

pub type Band = band::BandSpec<f64>;
pub type Waveform = waveform::SampledWaveform<f64>;
pub type Pulse = pulse::LegendrePulse<f64>;
pub type Scene = echo::ReflectorScene<f64>;
pub type Noise = fisher::NoiseSpec<f64>;
pub type Report = fisher::FisherReport<f64>;
pub type Estimate = estimation::EstimateResult<f64>;
pub type Network = echo::CableNetwork<f64>;
