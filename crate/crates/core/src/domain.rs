//! Parameter types, the density/measure correspondence, and feasibility
//! checking.
//!
//! Everything downstream works in shifted coordinates `x - a`: a convex tail
//! density `f` on `[a, inf)` with `f(a) = eta`, right derivative at least
//! `-nu`, and mass `beta` corresponds one-to-one with a probability measure
//! `P` on `[0, inf)` satisfying
//!
//! ```text
//! E[X] = mu = eta / nu,        E[X^2] = sigma = 2 * beta / nu,
//! f'(x + a) = nu * (P[0, x] - 1).
//! ```
//!
//! Measures with at most three support points suffice to describe every
//! extremal density, which is why [`MomentMeasure`] is capped at three points
//! and [`PiecewiseLinearDensity`] at three linear segments.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::num;
use crate::{Error, Result};

/// Relative tolerance deciding whether `sigma - mu^2` is zero, i.e. whether
/// the parameters sit exactly on the consistency boundary.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

/// Relative tolerance on weight sums before a [`MomentMeasure`] is rejected
/// instead of renormalized.
const WEIGHT_SUM_REL_TOL: f64 = 1e-12;

/// Relative tolerance on the moment match in [`density_from_measure`].
const MOMENT_MATCH_REL_TOL: f64 = 1e-9;

fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

/// Local tail description of an unknown density at a threshold `a`:
/// tail mass `beta = P(X >= a)`, density level `eta = f(a)`, and slope
/// magnitude bound `nu >= -f'(a+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailParams {
    pub a: f64,
    pub beta: f64,
    pub eta: f64,
    pub nu: f64,
}

impl TailParams {
    /// Validates `beta` in (0,1), `eta > 0`, `nu > 0`, all finite.
    pub fn new(a: f64, beta: f64, eta: f64, nu: f64) -> Result<Self> {
        let p = TailParams { a, beta, eta, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("a", self.a)?;
        ensure_finite("beta", self.beta)?;
        ensure_finite("eta", self.eta)?;
        ensure_finite("nu", self.nu)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.eta <= 0.0 {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter(format!("nu must be > 0, got {}", self.nu)));
        }
        Ok(())
    }
}

/// First and second moments of the reduced measure on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentParams {
    pub mu: f64,
    pub sigma: f64,
}

impl MomentParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        ensure_finite("mu", mu)?;
        ensure_finite("sigma", sigma)?;
        if mu <= 0.0 || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "moments must be positive, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(MomentParams { mu, sigma })
    }
}

/// `mu = eta/nu`, `sigma = 2*beta/nu`.
pub fn to_moment_params(p: &TailParams) -> MomentParams {
    MomentParams { mu: p.eta / p.nu, sigma: 2.0 * p.beta / p.nu }
}

/// Whether tail parameters admit any convex tail density at all.
///
/// Feasibility is equivalent to `eta^2 <= 2*beta*nu`, i.e. `sigma >= mu^2`
/// on the moment side. On the boundary exactly one density exists: the
/// triangle `f(x) = eta - nu*(x - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Strict,
    Boundary,
    Infeasible,
}

/// Classifies `sigma` against `mu^2` with relative tolerance
/// [`BOUNDARY_REL_TOL`].
pub fn consistency_check(m: &MomentParams) -> Consistency {
    let gap = m.sigma - m.mu * m.mu;
    let scale = m.sigma.max(m.mu * m.mu);
    if num::abs(gap) <= BOUNDARY_REL_TOL * scale {
        Consistency::Boundary
    } else if gap > 0.0 {
        Consistency::Strict
    } else {
        Consistency::Infeasible
    }
}

/// Confidence-interval version of [`TailParams`]: two-sided intervals for
/// `beta` and `eta`, an upper bound for `nu`, and the joint confidence
/// complement `alpha` the intervals were built at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalParams {
    pub a: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub nu_hi: f64,
    pub alpha: f64,
}

impl IntervalParams {
    pub fn new(
        a: f64,
        beta_lo: f64,
        beta_hi: f64,
        eta_lo: f64,
        eta_hi: f64,
        nu_hi: f64,
        alpha: f64,
    ) -> Result<Self> {
        let p = IntervalParams { a, beta_lo, beta_hi, eta_lo, eta_hi, nu_hi, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("a", self.a),
            ("beta_lo", self.beta_lo),
            ("beta_hi", self.beta_hi),
            ("eta_lo", self.eta_lo),
            ("eta_hi", self.eta_hi),
            ("nu_hi", self.nu_hi),
            ("alpha", self.alpha),
        ] {
            ensure_finite(name, x)?;
        }
        if !(self.beta_lo > 0.0 && self.beta_lo <= self.beta_hi && self.beta_hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < beta_lo <= beta_hi < 1, got [{}, {}]",
                self.beta_lo, self.beta_hi
            )));
        }
        if !(self.eta_lo > 0.0 && self.eta_lo <= self.eta_hi) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < eta_lo <= eta_hi, got [{}, {}]",
                self.eta_lo, self.eta_hi
            )));
        }
        if self.nu_hi <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nu_hi must be > 0, got {}",
                self.nu_hi
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Exact parameters describe a degenerate interval.
    pub fn from_point(p: &TailParams, alpha: f64) -> Result<Self> {
        IntervalParams::new(p.a, p.beta, p.beta, p.eta, p.eta, p.nu, alpha)
    }
}

/// Moment boxes induced by interval parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMomentParams {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

/// `mu` range `[eta_lo/nu_hi, eta_hi/nu_hi]`, `sigma` range
/// `[2*beta_lo/nu_hi, 2*beta_hi/nu_hi]`.
///
/// Only the upper slope bound enters: a smaller slope magnitude never
/// shrinks the feasible set of tails, so the worst case sits at `nu_hi`.
pub fn to_interval_moment_params(p: &IntervalParams) -> IntervalMomentParams {
    IntervalMomentParams {
        mu_lo: p.eta_lo / p.nu_hi,
        mu_hi: p.eta_hi / p.nu_hi,
        sigma_lo: 2.0 * p.beta_lo / p.nu_hi,
        sigma_hi: 2.0 * p.beta_hi / p.nu_hi,
    }
}

/// A probability measure on `[0, inf)` with at most three support points,
/// in shifted coordinates (original axis minus `a`).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMeasure {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl MomentMeasure {
    /// Builds a measure from support points and matching weights.
    ///
    /// Support points must be finite and nonnegative (they are sorted here,
    /// pairs kept together). Weights must be nonnegative and sum to 1; sums
    /// off by at most 1e-12 in relative terms are renormalized, anything
    /// further off is rejected.
    pub fn new(support: &[f64], weights: &[f64]) -> Result<Self> {
        if support.is_empty() || support.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "support must have 1 to 3 points, got {}",
                support.len()
            )));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "support/weight length mismatch: {} vs {}",
                support.len(),
                weights.len()
            )));
        }
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(support.len());
        for (&x, &w) in support.iter().zip(weights) {
            ensure_finite("support point", x)?;
            ensure_finite("weight", w)?;
            if x < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "support points must be nonnegative, got {x}"
                )));
            }
            if w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "weights must be nonnegative, got {w}"
                )));
            }
            pairs.push((x, w));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite support"));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if num::abs(total - 1.0) > WEIGHT_SUM_REL_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        Ok(MomentMeasure {
            support: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// First and second moments `(E[X], E[X^2])`.
    pub fn moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (&x, &w) in self.support.iter().zip(&self.weights) {
            m1 += w * x;
            m2 += w * x * x;
        }
        (m1, m2)
    }
}

/// A continuous, convex, non-increasing piecewise-linear tail density.
///
/// Knots are on the original axis with `knots[0] = a`; values are the
/// density at each knot and slopes are derived from them, so continuity
/// holds by construction. `limiting = true` marks the pointwise limit of a
/// maximizing sequence whose excess mass escapes to infinity; the stored
/// segments then integrate to less than the nominal tail mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearDensity {
    a: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    limiting: bool,
}

impl PiecewiseLinearDensity {
    /// Validates and builds a density. Zero-length segments are dropped.
    ///
    /// Requirements: `knots[0] = a`, knots non-decreasing, values
    /// nonnegative and non-increasing, slopes non-decreasing (convexity),
    /// final value 0. Tiny violations from float arithmetic (relative
    /// 1e-9 on the natural scale) are tolerated.
    pub fn new(a: f64, knots: &[f64], values: &[f64], limiting: bool) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need matching knots/values with at least 2 entries, got {} and {}",
                knots.len(),
                values.len()
            )));
        }
        if knots.len() > 4 {
            return Err(Error::InvalidParameter(format!(
                "at most 3 segments (4 knots) supported, got {} knots",
                knots.len()
            )));
        }
        for &k in knots {
            ensure_finite("knot", k)?;
        }
        for &v in values {
            ensure_finite("value", v)?;
        }
        if knots[0] != a {
            return Err(Error::InvalidParameter(format!(
                "first knot must equal a={a}, got {}",
                knots[0]
            )));
        }
        let vscale = values.iter().fold(0.0_f64, |m, &v| m.max(num::abs(v)));
        let kscale = knots.iter().fold(1.0_f64, |m, &k| m.max(num::abs(k)));
        let vtol = 1e-9 * vscale.max(1e-300);

        // Drop zero-length segments, keeping the earlier value; a genuine
        // jump at a repeated knot is a discontinuity and gets rejected.
        let mut ks: Vec<f64> = Vec::with_capacity(knots.len());
        let mut vs: Vec<f64> = Vec::with_capacity(values.len());
        for (&k, &v) in knots.iter().zip(values) {
            if let Some(&prev_k) = ks.last() {
                if k < prev_k {
                    return Err(Error::InvalidParameter(format!(
                        "knots must be non-decreasing, got {k} after {prev_k}"
                    )));
                }
                if k == prev_k {
                    let prev_v = *vs.last().expect("paired");
                    if num::abs(v - prev_v) > vtol {
                        return Err(Error::InvalidParameter(format!(
                            "discontinuity at repeated knot {k}: {prev_v} vs {v}"
                        )));
                    }
                    continue;
                }
            }
            ks.push(k);
            vs.push(v);
        }
        if ks.len() < 2 {
            return Err(Error::InvalidParameter(String::from(
                "density collapses to a single point",
            )));
        }

        for &v in &vs {
            if v < -vtol {
                return Err(Error::InvalidParameter(format!("negative density value {v}")));
            }
        }
        for w in vs.windows(2) {
            if w[1] > w[0] + vtol {
                return Err(Error::InvalidParameter(format!(
                    "density values must be non-increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let slope_tol = 1e-9 * (vscale / kscale).max(1e-300);
        let mut prev_slope = f64::NEG_INFINITY;
        for i in 0..ks.len() - 1 {
            let s = (vs[i + 1] - vs[i]) / (ks[i + 1] - ks[i]);
            if s < prev_slope - slope_tol {
                return Err(Error::InvalidParameter(format!(
                    "slopes must be non-decreasing (convexity), got {s} after {prev_slope}"
                )));
            }
            prev_slope = s;
        }
        if num::abs(*vs.last().expect("nonempty")) > vtol {
            return Err(Error::InvalidParameter(format!(
                "density must vanish at the last knot, got {}",
                vs.last().expect("nonempty")
            )));
        }
        let last = vs.len() - 1;
        vs[last] = 0.0;
        // Clamp float dust so stored values honor the invariants exactly.
        for v in &mut vs {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(PiecewiseLinearDensity { a, knots: ks, values: vs, limiting })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn limiting(&self) -> bool {
        self.limiting
    }

    /// Density value at `x`; zero outside `[a, last knot]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.a || x > *self.knots.last().expect("nonempty") {
            return 0.0;
        }
        // Knot count is at most 4, linear scan wins over binary search.
        for i in 0..self.knots.len() - 1 {
            let (k0, k1) = (self.knots[i], self.knots[i + 1]);
            if x <= k1 {
                let t = (x - k0) / (k1 - k0);
                return self.values[i] + t * (self.values[i + 1] - self.values[i]);
            }
        }
        0.0
    }

    /// Slope of each linear segment.
    pub fn slopes(&self) -> Vec<f64> {
        (0..self.knots.len() - 1)
            .map(|i| (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]))
            .collect()
    }

    /// Exact integral over `[a, inf)` (trapezoid per linear segment).
    ///
    /// For `limiting` densities this is the mass of the stored segments
    /// only; the deficit against the nominal `beta` has escaped to
    /// infinity.
    pub fn total_mass(&self) -> f64 {
        let mut mass = 0.0;
        for i in 0..self.knots.len() - 1 {
            mass += 0.5
                * (self.values[i] + self.values[i + 1])
                * (self.knots[i + 1] - self.knots[i]);
        }
        mass
    }
}

/// Reconstructs the tail density corresponding to a reduced measure.
///
/// Between consecutive shifted support points the density has slope
/// `-nu * (1 - P[0, x])`; it starts at `(a, eta)` and reaches zero at
/// `a + x_last`. The measure must reproduce `mu = eta/nu` and
/// `sigma = 2*beta/nu` (relative tolerance 1e-9) or a calibration
/// mismatch is reported.
pub fn density_from_measure(m: &MomentMeasure, p: &TailParams) -> Result<PiecewiseLinearDensity> {
    p.validate()?;
    let target = to_moment_params(p);
    let (m1, m2) = m.moments();
    if !num::close(m1, target.mu, MOMENT_MATCH_REL_TOL)
        || !num::close(m2, target.sigma, MOMENT_MATCH_REL_TOL)
    {
        return Err(Error::CalibrationMismatch(format!(
            "measure moments ({m1}, {m2}) do not match (mu, sigma) = ({}, {})",
            target.mu, target.sigma
        )));
    }

    // Cumulative weights fix the slope on each inter-support segment.
    let mut knots: Vec<f64> = Vec::with_capacity(m.support().len() + 1);
    let mut values: Vec<f64> = Vec::with_capacity(m.support().len() + 1);
    knots.push(p.a);
    values.push(p.eta);
    let mut cum = 0.0;
    let mut prev_x = 0.0;
    for (&x, &w) in m.support().iter().zip(m.weights()) {
        if x > prev_x {
            let slope = -p.nu * (1.0 - cum);
            let v = values.last().expect("nonempty") + slope * (x - prev_x);
            knots.push(p.a + x);
            values.push(v);
            prev_x = x;
        }
        cum += w;
    }
    let tail_value = *values.last().expect("nonempty");
    if num::abs(tail_value) > 1e-9 * p.eta {
        return Err(Error::CalibrationMismatch(format!(
            "reconstructed density does not vanish at its last knot (value {tail_value}); \
             measure is not feasible for these parameters"
        )));
    }
    let last = values.len() - 1;
    values[last] = 0.0;
    PiecewiseLinearDensity::new(p.a, &knots, &values, false)
}

/// Outcome of checking one density constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub pass: bool,
    /// Signed defect on the constraint's own scale (0 when clean).
    pub error: f64,
}

/// Constraint-by-constraint feasibility of a density against parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `integral of f = beta` within the requested tolerance.
    pub mass: Check,
    /// `f(a) = eta` (up to a few ulps).
    pub eta: Check,
    /// Every slope within `[-nu, 0]`.
    pub slope_range: Check,
    /// Slopes non-decreasing left to right.
    pub convexity: Check,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.mass.pass && self.eta.pass && self.slope_range.pass && self.convexity.pass
    }
}

/// Checks a density against tail parameters: mass within `tol` (relative),
/// exact level at `a`, slopes within `[-nu, 0]`, convexity.
pub fn verify_density_feasibility(
    f: &PiecewiseLinearDensity,
    p: &TailParams,
    tol: f64,
) -> FeasibilityReport {
    let mass = f.total_mass();
    let mass_err = (mass - p.beta) / p.beta;
    let eta_err = (f.values()[0] - p.eta) / p.eta;
    let slopes = f.slopes();
    let mut range_err = 0.0_f64;
    for &s in &slopes {
        if s > 0.0 {
            range_err = range_err.max(s / p.nu);
        }
        if s < -p.nu {
            range_err = range_err.max((-s - p.nu) / p.nu);
        }
    }
    let mut convex_err = 0.0_f64;
    for w in slopes.windows(2) {
        if w[1] < w[0] {
            convex_err = convex_err.max((w[0] - w[1]) / p.nu);
        }
    }
    FeasibilityReport {
        mass: Check { pass: num::abs(mass_err) <= tol, error: mass_err },
        eta: Check { pass: num::abs(eta_err) <= 1e-14, error: eta_err },
        slope_range: Check { pass: range_err <= tol.max(1e-12), error: range_err },
        convexity: Check { pass: convex_err <= tol.max(1e-12), error: convex_err },
    }
}

/// How the worst case is achieved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailClass {
    /// A feasible density attains the bound.
    AttainedLight,
    /// The bound is the limit of a maximizing sequence; mass escapes to
    /// infinity and `density` holds the pointwise limit.
    LimitingHeavy,
    /// Parameters sit on the consistency boundary; exactly one density is
    /// feasible and the "bound" is just its objective value.
    DegenerateUnique,
    /// No convex tail matches the parameters.
    Infeasible,
}

impl TailClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailClass::AttainedLight => "attained-light",
            TailClass::LimitingHeavy => "limiting-heavy",
            TailClass::DegenerateUnique => "degenerate-unique",
            TailClass::Infeasible => "infeasible",
        }
    }
}

/// Argmax location reported by the solvers. `omega`/`rho` are only present
/// for interval solves (the maximizing mean and second moment).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximizer {
    pub x1: f64,
    pub omega: Option<f64>,
    pub rho: Option<f64>,
}

/// Numerical trace of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub grid_points: usize,
    /// Outer grid of the interval solver; absent for point solves.
    pub outer_grid_points: Option<usize>,
    pub refine_iterations: usize,
    /// Final search-bracket width, relative to the parameter scale.
    pub achieved_tolerance: f64,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn none() -> Self {
        Diagnostics {
            grid_points: 0,
            outer_grid_points: None,
            refine_iterations: 0,
            achieved_tolerance: 0.0,
            warnings: Vec::new(),
        }
    }
}

/// Result of a worst-case bound computation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    /// Worst-case objective value; absent exactly when infeasible.
    pub value: Option<f64>,
    pub tail_class: TailClass,
    /// Worst-case density (pointwise limit when `limiting`); absent when
    /// infeasible.
    pub density: Option<PiecewiseLinearDensity>,
    pub maximizer: Option<Maximizer>,
    pub diagnostics: Diagnostics,
}
