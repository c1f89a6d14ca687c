//! Float helpers that resolve to `std` intrinsics when available and to
//! `libm` otherwise, so the rest of the crate never touches `std` float
//! methods directly.

#[cfg(feature = "std")]
mod imp {
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    pub fn expm1(x: f64) -> f64 {
        x.exp_m1()
    }
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    pub fn expm1(x: f64) -> f64 {
        libm::expm1(x)
    }
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
}

pub(crate) use imp::{abs, exp, expm1, ln, sqrt};

/// `true` when `x` is within `rel` of `y` on a scale that degrades to an
/// absolute comparison near zero.
pub(crate) fn close(x: f64, y: f64, rel: f64) -> bool {
    abs(x - y) <= rel * abs(x).max(abs(y)).max(1.0)
}
