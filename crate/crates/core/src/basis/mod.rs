//! Special functions and quadrature: Legendre polynomials, spherical Bessel
//! functions and Gauss-Legendre rules.
//!
//! The scaled polynomials `sqrt((2n+1)/2) P_n(u)` are an orthonormal basis of
//! spectra supported on `[-1, 1]`, and their Fourier transforms are
//! `sqrt(2/pi) sqrt((2n+1)/2) i^n j_n(t)`.

mod bessel;
mod legendre;
mod quadrature;

pub use bessel::{spherical_bessel_j, spherical_bessel_sequence};
pub use legendre::{legendre, legendre_norm, normalized_legendre};
pub use quadrature::{default_order_for_degree, gauss_legendre, QuadratureRule};

pub(crate) use legendre::legendre_unchecked;
