//! Adaptive Simpson quadrature.
//!
//! One routine, absolute-tolerance driven, with a forced minimum recursion
//! depth so step discontinuities cannot fool the error estimate into early
//! acceptance. Good enough for every integral in this crate: integrands are
//! bounded and piecewise smooth, and callers split at known breakpoints.

const MIN_DEPTH: u32 = 4;
const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`.
///
/// Returns 0 when `hi <= lo`. Non-finite integrand values propagate as NaN
/// so callers notice instead of silently integrating garbage.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mid = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(mid), f(hi));
    let whole = simpson(lo, hi, fa, fm, fb);
    recurse(f, lo, hi, fa, fm, fb, whole, tol.max(f64::MIN_POSITIVE), 0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Interval too thin to split further in f64: accept what we have.
    let exhausted = !(lm > a && m > lm && rm > m && b > rm);
    if (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol) || depth >= MAX_DEPTH || exhausted {
        return left + right + delta / 15.0;
    }
    let half = 0.5 * tol;
    recurse(f, a, m, fa, flm, fm, left, half, depth + 1)
        + recurse(f, m, b, fm, frm, fb, right, half, depth + 1)
}
