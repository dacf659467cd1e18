//! Overflow-safe hyperbolic ratios for nonnegative arguments.
//!
//! `cosh`/`sinh` overflow near 710 in f64; everything here is written in
//! terms of `exp(-u)` so arguments up to 1e8 and beyond stay finite.

/// `1 / cosh(u)` for `u >= 0`; underflows to 0 for large `u`.
pub(crate) fn sech(u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    let e = (-u).exp();
    2.0 * e / (1.0 + e * e)
}

/// `1 / sinh(u)` for `u > 0`; underflows to 0 for large `u`.
pub(crate) fn csch(u: f64) -> f64 {
    debug_assert!(u > 0.0);
    // 1 - e^{-2u} via expm1 keeps small u accurate.
    2.0 * (-u).exp() / (-(-2.0 * u).exp_m1())
}

/// `cosh(u)/sinh(u)` for `u > 0`.
pub(crate) fn coth(u: f64) -> f64 {
    debug_assert!(u > 0.0);
    1.0 / u.tanh()
}

/// `sinh(a)/sinh(b)` for `0 <= a <= b`, safe for large `b`.
pub(crate) fn sinh_ratio(a: f64, b: f64) -> f64 {
    debug_assert!((0.0..=b).contains(&a));
    if a == 0.0 {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    (a - b).exp() * (-(-2.0 * a).exp_m1()) / (-(-2.0 * b).exp_m1())
}
