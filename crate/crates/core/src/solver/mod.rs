//! Reduction of the worst-case tail bound to a line search.
//!
//! Known tail parameters turn the problem into maximizing a one-dimensional
//! function of the smaller support point `x1` (see [`two_point_value`]);
//! interval parameters add one outer coordinate (a moment pushed to its box
//! edge) around the same kernel. Both solvers share the grid-then-golden
//! search below.

use crate::num;
use crate::objective::ObjectiveSpec;
use crate::{Error, Result};

mod interval;
mod point;

pub use interval::solve_interval;
pub use point::solve_point;

/// Singularity guard: `x1` within this relative distance of the mean is
/// evaluated through the degenerate limit rather than the two-point formula.
pub(crate) const LIMIT_GUARD_REL: f64 = 1e-8;

/// Relative slack when deciding whether the optimum is attained by an
/// interior maximizer or only approached in the degenerate limit, and when
/// breaking ties between candidate maximizers.
pub(crate) const CLASSIFY_REL_TOL: f64 = 1e-9;

/// Controls for the one-dimensional grid-then-refine search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    /// Points in the initial uniform sweep, endpoints included.
    pub grid_points: usize,
    /// Relative bracket width at which golden-section refinement stops.
    pub refine_tol: f64,
    /// Cap on golden-section iterations.
    pub refine_max_iter: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig { grid_points: 10_001, refine_tol: 1e-10, refine_max_iter: 200 }
    }
}

impl LineSearchConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(Error::InvalidParameter(alloc::format!(
                "grid_points = {} but the sweep needs at least 3 points",
                self.grid_points
            )));
        }
        if !(self.refine_tol > 0.0) || !self.refine_tol.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "refine_tol = {} must be positive and finite",
                self.refine_tol
            )));
        }
        Ok(())
    }
}

/// Controls for the two-dimensional interval search: an outer sweep over the
/// free moment coordinate, an inner line search in `x1` at each outer point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Points in the outer sweep over the free moment coordinate.
    pub outer_grid_points: usize,
    /// Inner `x1` search run at every outer point.
    pub inner: LineSearchConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            outer_grid_points: 201,
            inner: LineSearchConfig { grid_points: 1_001, ..LineSearchConfig::default() },
        }
    }
}

impl SearchConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.outer_grid_points < 3 {
            return Err(Error::InvalidParameter(alloc::format!(
                "outer_grid_points = {} but the sweep needs at least 3 points",
                self.outer_grid_points
            )));
        }
        self.inner.validate()
    }
}

/// Objective value `nu * E[H]` of the two-point measure with mean `mean`,
/// raw second moment `second`, and smaller support point `x1`.
///
/// The measure places weight `(second - mean^2)/d` on `x1` and
/// `(mean - x1)^2/d` on `(second - mean*x1)/(mean - x1)`, where
/// `d = second - 2*mean*x1 + x1^2`. As `x1` approaches `mean` the larger
/// point escapes to infinity and the value tends to
/// `nu * (H(mean) + lambda * (second - mean^2))`; inside the guard band the
/// limit form is returned directly.
///
/// Requires `0 <= x1 <= mean` and `second >= mean^2`.
pub fn two_point_value(
    x1: f64,
    mean: f64,
    second: f64,
    nu: f64,
    obj: &ObjectiveSpec,
) -> Result<f64> {
    if !x1.is_finite() || x1 < 0.0 || x1 > mean {
        return Err(Error::OutOfDomain(alloc::format!(
            "x1 = {x1} lies outside [0, {mean}]"
        )));
    }
    if second < mean * mean * (1.0 - 1e-12) {
        return Err(Error::OutOfDomain(alloc::format!(
            "second moment {second} is below the square of the mean {mean}"
        )));
    }
    Ok(two_point_value_unchecked(x1, mean, second, nu, obj))
}

pub(crate) fn two_point_value_unchecked(
    x1: f64,
    mean: f64,
    second: f64,
    nu: f64,
    obj: &ObjectiveSpec,
) -> f64 {
    let gap = (second - mean * mean).max(0.0);
    if mean - x1 < LIMIT_GUARD_REL * mean {
        return nu * (obj.big_h(mean) + obj.lambda() * gap);
    }
    let d = gap + (mean - x1) * (mean - x1);
    let x2 = (second - mean * x1) / (mean - x1);
    nu * (gap * obj.big_h(x1) + (mean - x1) * (mean - x1) * obj.big_h(x2)) / d
}

/// Outcome of a one-dimensional search: the maximizer, its value, and how
/// hard the refinement worked.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LineSearchResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    /// Final bracket width relative to the domain length.
    pub achieved_tol: f64,
}

/// Golden-section refinement inside the grid bracket around index `best_i`
/// of an `n`-point uniform grid on `[lo, hi]`. The reported tolerance is the
/// final bracket width relative to the domain length.
pub(crate) fn golden_refine_around<F: Fn(f64) -> f64>(
    f: &F,
    best_i: usize,
    n: usize,
    lo: f64,
    hi: f64,
    cfg: &LineSearchConfig,
) -> LineSearchResult {
    let span = hi - lo;
    if span <= 0.0 {
        return LineSearchResult { x: lo, value: f(lo), iterations: 0, achieved_tol: 0.0 };
    }
    let step = span / ((n - 1) as f64);
    let bracket_lo = if best_i == 0 { lo } else { lo + step * ((best_i - 1) as f64) };
    let bracket_hi = if best_i + 1 >= n { hi } else { lo + step * ((best_i + 1) as f64) };
    let r = golden_max(f, bracket_lo, bracket_hi, cfg.refine_tol * span, cfg.refine_max_iter);
    LineSearchResult { achieved_tol: r.achieved_tol / span, ..r }
}

/// Plain golden-section maximization on `[lo, hi]` down to an absolute
/// bracket width `tol_abs`. Returns the better of the final interior probes.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    tol_abs: f64,
    max_iter: usize,
) -> LineSearchResult {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol_abs && iterations < max_iter {
        // On exact ties shrink from the right so the search drifts toward
        // the smaller abscissa.
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
        iterations += 1;
    }
    let (x, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    LineSearchResult { x, value, iterations, achieved_tol: hi - lo }
}

/// Shared tolerance for "these two candidate values are the same optimum".
pub(crate) fn values_tie(a: f64, b: f64) -> bool {
    num::close(a, b, CLASSIFY_REL_TOL)
}
