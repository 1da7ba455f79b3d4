// Routes float intrinsics through `num_traits::Float`, which uses the
// platform libm under `std` and the pure-Rust `libm` crate otherwise.
use num_traits::Float;

#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    Float::exp(x)
}

#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    Float::ln(x)
}

#[inline(always)]
pub(crate) fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline(always)]
pub(crate) fn exp_m1(x: f64) -> f64 {
    Float::exp_m1(x)
}
