//! Standard normal density and distribution function.
//!
//! `Φ` is evaluated through `erfc` from the `libm` crate (a port of the
//! FreeBSD msun implementation, rational approximations accurate to about
//! one ulp), which keeps full relative accuracy in both tails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}
