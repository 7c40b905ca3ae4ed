use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Legendre polynomial `P_n(u)` on `[-1, 1]`.
///
/// Uses the three-term recurrence `(k+1) P_{k+1} = (2k+1) u P_k - k P_{k-1}`.
pub fn legendre<T: Real>(n: usize, u: T) -> Result<T> {
    check_domain(u)?;
    Ok(legendre_unchecked(n, u))
}

/// `sqrt((2n+1)/2) P_n(u)`, orthonormal on `[-1, 1]`.
pub fn normalized_legendre<T: Real>(n: usize, u: T) -> Result<T> {
    Ok(legendre_norm::<T>(n) * legendre(n, u)?)
}

/// The scale `sqrt((2n+1)/2)` that makes `P_n` unit-norm.
#[inline]
pub fn legendre_norm<T: Real>(n: usize) -> T {
    (from_usize::<T>(2 * n + 1) / lit(2.0)).sqrt()
}

fn check_domain<T: Real>(u: T) -> Result<()> {
    if u.abs() <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "u",
            value: to_f64(u),
            domain: "[-1, 1]",
        })
    }
}

pub(crate) fn legendre_unchecked<T: Real>(n: usize, u: T) -> T {
    legendre_pair(n, u).0
}

/// Returns `(P_n(u), P_{n-1}(u))`, with `P_{-1} = 0`.
fn legendre_pair<T: Real>(n: usize, u: T) -> (T, T) {
    let mut prev = T::zero();
    let mut cur = T::one();
    for k in 0..n {
        let kf = from_usize::<T>(k);
        let next = ((kf + kf + T::one()) * u * cur - kf * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `P_n(u)` and `P_n'(u)` for `|u| < 1`.
pub(crate) fn legendre_with_derivative<T: Real>(n: usize, u: T) -> (T, T) {
    let (p, p_prev) = legendre_pair(n, u);
    if n == 0 {
        return (p, T::zero());
    }
    let nf = from_usize::<T>(n);
    let dp = nf * (u * p - p_prev) / (u * u - T::one());
    (p, dp)
}
