//! Legendre polynomials and spherical Bessel/Hankel functions.
//!
//! The Hankel function is of the first kind, `h_n = j_n + i y_n`, so that
//! `h_0(x) = -i e^{ix} / x`. Derivatives use `f_n' = f_{n-1} - (n+1)/x f_n`
//! (and `f_0' = -f_1`).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Legendre polynomial `P_n(x)` by upward three-term recurrence.
pub fn legendre_p(n: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(format!("legendre argument {x} outside [-1, 1]")));
    }
    Ok(legendre_unchecked(n, x))
}

pub(crate) fn legendre_unchecked(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Spherical Bessel function of the first kind, `j_n(x)`.
///
/// Power series below `x = 1`, normalized Miller downward recurrence above.
pub fn sph_bessel_j(n: usize, x: f64) -> f64 {
    if x < 0.0 {
        let v = sph_bessel_j(n, -x);
        return if n.is_multiple_of(2) { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1.0 {
        return j_series(n, x);
    }
    j_miller(n, x)
}

fn j_series(n: usize, x: f64) -> f64 {
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= x / (2 * k + 1) as f64;
    }
    let half_sq = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= half_sq / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn j_miller(n: usize, x: f64) -> f64 {
    let start = n + x as usize + 40;
    let mut upper = 0.0_f64;
    let mut cur = 1e-30_f64;
    let mut at_n = 0.0;
    let f0;
    let mut f1 = 0.0;
    // cur holds f_k while stepping k from start down to 0
    let mut k = start;
    loop {
        if k == n {
            at_n = cur;
        }
        if k == 1 {
            f1 = cur;
        }
        if k == 0 {
            f0 = cur;
            break;
        }
        let lower = (2 * k + 1) as f64 / x * cur - upper;
        upper = cur;
        cur = lower;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            upper *= 1e-250;
            at_n *= 1e-250;
            f1 *= 1e-250;
        }
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let scale = if f0.abs() >= f1.abs() { j0 / f0 } else { j1 / f1 };
    at_n * scale
}

/// Derivative `j_n'(x)`.
pub fn sph_bessel_j_prime(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    if n == 0 {
        return -sph_bessel_j(1, x);
    }
    sph_bessel_j(n - 1, x) - (n + 1) as f64 / x * sph_bessel_j(n, x)
}

/// Spherical Bessel function of the second kind, `y_n(x)`, for `x > 0`.
pub fn sph_bessel_y(n: usize, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("y_n singular at x = {x}")));
    }
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    if n == 0 {
        return Ok(y0);
    }
    let mut prev = y0;
    let mut cur = -c / (x * x) - s / x;
    for k in 1..n {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Spherical Hankel function of the first kind, `h_n(x) = j_n(x) + i y_n(x)`.
pub fn sph_hankel1_h(n: usize, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(sph_bessel_j(n, x), sph_bessel_y(n, x)?))
}

/// Derivative `h_n'(x)`.
pub fn sph_hankel1_h_prime(n: usize, x: f64) -> Result<Complex64> {
    if n == 0 {
        return Ok(-sph_hankel1_h(1, x)?);
    }
    Ok(sph_hankel1_h(n - 1, x)? - (n + 1) as f64 / x * sph_hankel1_h(n, x)?)
}
