// Float functions for a no_std build.

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `ln(n!)` by direct summation; only used for small `n`.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| ln(i as f64)).sum()
}

/// `x ln x` with the `0 ln 0 = 0` convention.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * ln(x)
    } else {
        0.0
    }
}
