//! Spherical Bessel functions of the first kind, `j_n(t)`.
//!
//! Three regimes, picked per order:
//!
//! * `|t| < max(1, n/2)`: ascending power series. The closed trigonometric
//!   forms cancel catastrophically here.
//! * `n/2 <= |t| < n`: Miller's downward recurrence started at
//!   `n + 15 + ceil(|t|)`, normalized with `sum_k (2k+1) j_k(t)^2 = 1`.
//! * `n <= |t|`: upward recurrence from the closed forms of `j_0` and `j_1`.

use crate::scalar::{from_usize, lit, Real};

/// `j_n(t)` for integer order `n >= 0` and any real `t`.
pub fn spherical_bessel_j<T: Real>(n: usize, t: T) -> T {
    let x = t.abs();
    if x.is_zero() {
        return if n == 0 { T::one() } else { T::zero() };
    }
    let value = if x < series_limit(n) {
        series(n, x)
    } else if from_usize::<T>(n) > x {
        miller(n, x)[n]
    } else {
        upward(n, x)[n]
    };
    apply_parity(n, t, value)
}

/// `[j_0(t), j_1(t), ..., j_{n_max}(t)]`.
///
/// Shares the recurrences across orders, so it is much cheaper than calling
/// [`spherical_bessel_j`] once per order.
pub fn spherical_bessel_sequence<T: Real>(n_max: usize, t: T) -> Vec<T> {
    let x = t.abs();
    let mut out = vec![T::zero(); n_max + 1];
    if x.is_zero() {
        out[0] = T::one();
        return out;
    }

    // Orders k with x < max(1, k/2) go through the series.
    let series_from = if x < T::one() {
        0
    } else {
        (x + x).floor().to_usize().unwrap_or(usize::MAX).saturating_add(1)
    };
    for (k, slot) in out.iter_mut().enumerate().skip(series_from) {
        *slot = series(k, x);
    }

    if series_from > 0 {
        let top = n_max.min(series_from - 1);
        let x_floor = x.floor().to_usize().unwrap_or(usize::MAX);
        let up_top = top.min(x_floor);
        let up = upward(up_top, x);
        out[..=up_top].copy_from_slice(&up);
        if top > up_top {
            let down = miller(top, x);
            out[up_top + 1..=top].copy_from_slice(&down[up_top + 1..=top]);
        }
    }

    if t < T::zero() {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

fn series_limit<T: Real>(n: usize) -> T {
    T::one().max(from_usize::<T>(n) / lit(2.0))
}

fn apply_parity<T: Real>(n: usize, t: T, value: T) -> T {
    if t < T::zero() && n % 2 == 1 {
        -value
    } else {
        value
    }
}

/// `x^n / (2n+1)!! * sum_k (-x^2/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1))`.
fn series<T: Real>(n: usize, x: T) -> T {
    let mut prefactor = T::one();
    for i in 1..=n {
        prefactor = prefactor * x / from_usize::<T>(2 * i + 1);
    }
    if prefactor.is_zero() {
        return prefactor;
    }
    let half_x2 = x * x / lit(2.0);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..500 {
        term = -term * half_x2 / (from_usize::<T>(k) * from_usize::<T>(2 * n + 2 * k + 1));
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() * lit(0.25) {
            break;
        }
    }
    prefactor * sum
}

/// `j_0..=j_top` for `x >= 1` by upward recurrence; only stable for `top <= x`.
fn upward<T: Real>(top: usize, x: T) -> Vec<T> {
    let (s, c) = (x.sin(), x.cos());
    let j0 = s / x;
    let mut out = Vec::with_capacity(top + 1);
    out.push(j0);
    if top == 0 {
        return out;
    }
    let j1 = s / (x * x) - c / x;
    out.push(j1);
    let (mut prev, mut cur) = (j0, j1);
    for k in 1..top {
        let next = from_usize::<T>(2 * k + 1) / x * cur - prev;
        out.push(next);
        prev = cur;
        cur = next;
    }
    out
}

/// `j_0..=j_top` by normalized downward recurrence, for `x >= 1`, `top >= 1`.
fn miller<T: Real>(top: usize, x: T) -> Vec<T> {
    let ceil_x = x.ceil().to_usize().unwrap_or(usize::MAX);
    let start = top.max(1) + 15 + ceil_x;
    let big = T::max_value().sqrt().sqrt();

    let mut vals = vec![T::zero(); top.max(1) + 1];
    let mut f_above = T::zero();
    let mut f = T::min_positive_value().sqrt();
    let mut norm = from_usize::<T>(2 * start + 1) * f * f;
    for k in (1..=start).rev() {
        let below = from_usize::<T>(2 * k + 1) / x * f - f_above;
        f_above = f;
        f = below;
        norm = norm + from_usize::<T>(2 * k - 1) * f * f;
        if k - 1 < vals.len() {
            vals[k - 1] = f;
        }
        if f.abs() > big {
            let s = big.recip();
            f = f * s;
            f_above = f_above * s;
            norm = norm * s * s;
            for v in vals.iter_mut() {
                *v = *v * s;
            }
        }
    }

    let mut scale = norm.sqrt().recip();
    // Fix the overall sign against whichever closed form is larger.
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let (closed, raw) = if j0.abs() >= j1.abs() {
        (j0, vals[0])
    } else {
        (j1, vals[1])
    };
    if (closed < T::zero()) != (raw < T::zero()) {
        scale = -scale;
    }
    vals.truncate(top + 1);
    vals.iter().map(|&v| v * scale).collect()
}
