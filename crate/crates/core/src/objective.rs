//! Objective functions and the iterated integral the solvers consume.
//!
//! A usable objective `h` must be nonnegative (possibly after a recorded
//! constant shift), bounded, and quasi-concave on the tail: non-decreasing
//! up to a single peak `c`, non-increasing after it. Unbounded objectives
//! are rejected outright because the worst-case tail expectation is then
//! infinite for any consistent parameters.
//!
//! Alongside `h`, each [`ObjectiveSpec`] carries
//!
//! ```text
//! H(y) = integral 0..y integral 0..u of h(v + a) dv du
//! lambda = limit of H(y) / y^2 as y -> inf
//! ```
//!
//! in shifted coordinates `y = x - a`. `H` is what the moment-problem
//! reduction actually integrates against, and `lambda` prices the mass that
//! a maximizing sequence can push toward infinity; the light/heavy
//! classification hinges on whether `lambda` is zero. Built-in families get
//! exact closed-form `H`; user-supplied evaluators get validated by sampling
//! and integrated adaptively with the antiderivatives cached on a grid.
//! `lambda` is never inferred from samples: built-ins know it exactly and
//! numeric objectives must declare it.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::num;
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// Configuration for [`make_numeric_with`]. `scale` sets the sampled and
/// cached window `[a, a + 100*scale]`; evaluations beyond the cached range
/// fall back to the asymptote implied by the declared `lambda`.
#[derive(Debug, Clone, Copy)]
pub struct NumericConfig {
    /// Validation sample count over the window (default 10,001).
    pub samples: usize,
    /// Natural scale of the objective's variation (default 1.0).
    pub scale: f64,
    /// Uniform cache cells over the window (default 2,048).
    pub cells: usize,
    /// Relative tolerance of the cached quadrature (default 1e-9).
    pub rel_tol: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig { samples: 10_001, scale: 1.0, cells: 2_048, rel_tol: 1e-9 }
    }
}

type Evaluator = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A validated objective: the raw evaluator plus the analytic or cached
/// machinery for `H`, the declared supremum, the peak location, `lambda`,
/// and the nonnegativity shift (zero for all built-ins).
pub struct ObjectiveSpec {
    kind: Kind,
    /// Threshold the shifted coordinates refer to; `None` when the
    /// objective is constant and works at any threshold.
    a: Option<f64>,
    /// Declared supremum of |h| over the tail.
    h_bound: f64,
    /// Peak of the quasi-concave profile (original axis, may be +inf).
    mode_c: f64,
    /// `lim H(y)/y^2` for the internally shifted h.
    lambda: f64,
    /// Constant added to h internally so it is nonnegative; the solvers
    /// subtract `shift * beta` from their raw value to undo it.
    shift: f64,
    analytic: bool,
    warnings: Vec<String>,
    /// Discontinuities or kinks of h on the original axis; quadrature
    /// splits here.
    breakpoints: Vec<f64>,
}

enum Kind {
    /// Indicator of the open interval (c, d); stored shifted.
    IntervalIndicator { c: f64, d: f64, cp: f64, dp: f64 },
    Constant { level: f64 },
    /// Ramp from l to u capped at `cap = u - l`; stored shifted.
    StopLoss { l: f64, u: f64, lp: f64, up: f64, cap: f64 },
    /// `exp(-theta x)`; `scale = exp(-theta a)`.
    ExpUtility { theta: f64, scale: f64 },
    /// `p * max(q - x, 0)`; `qp = q - a`.
    Shortfall { p: f64, q: f64, qp: f64 },
    Numeric(NumericH),
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.kind {
            Kind::IntervalIndicator { c, d, .. } => format!("interval({c}, {d})"),
            Kind::Constant { level } => format!("constant({level})"),
            Kind::StopLoss { l, u, cap, .. } => format!("stop_loss({l}, {u}, cap={cap})"),
            Kind::ExpUtility { theta, .. } => format!("exp_utility(theta={theta})"),
            Kind::Shortfall { p, q, .. } => format!("shortfall(p={p}, q={q})"),
            Kind::Numeric(_) => String::from("numeric"),
        };
        f.debug_struct("ObjectiveSpec")
            .field("kind", &name)
            .field("a", &self.a)
            .field("h_bound", &self.h_bound)
            .field("lambda", &self.lambda)
            .field("shift", &self.shift)
            .finish()
    }
}

impl ObjectiveSpec {
    /// The raw objective on the original axis (no shift applied).
    pub fn h(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::IntervalIndicator { c, d, .. } => {
                if x > *c && x < *d {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Constant { level } => *level,
            Kind::StopLoss { l, u, cap, .. } => {
                if x < *l {
                    0.0
                } else if x < *u {
                    x - *l
                } else {
                    *cap
                }
            }
            Kind::ExpUtility { theta, .. } => num::exp(-theta * x),
            Kind::Shortfall { p, q, .. } => p * (q - x).max(0.0),
            Kind::Numeric(n) => (n.h)(x),
        }
    }

    /// The iterated integral `H(y)` of the internally shifted objective, in
    /// shifted coordinates; zero for `y <= 0`.
    pub fn big_h(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::IntervalIndicator { cp, dp, .. } => {
                if y <= *cp {
                    0.0
                } else if y <= *dp {
                    let t = y - cp;
                    0.5 * t * t
                } else {
                    (dp - cp) * y - 0.5 * (dp * dp - cp * cp)
                }
            }
            Kind::Constant { level } => 0.5 * level * y * y,
            Kind::StopLoss { lp, up, cap, .. } => {
                if y <= *lp {
                    0.0
                } else if y <= *up {
                    let t = y - lp;
                    t * t * t / 6.0
                } else {
                    let w = up - lp;
                    let t = y - up;
                    w * w * w / 6.0 + 0.5 * w * w * t + 0.5 * cap * t * t
                }
            }
            Kind::ExpUtility { theta, scale } => scale * exp_kernel(theta * y) * y * y,
            Kind::Shortfall { p, qp, .. } => {
                if y <= *qp {
                    p * (0.5 * qp * y * y - y * y * y / 6.0)
                } else {
                    p * qp * qp * qp / 3.0 + 0.5 * p * qp * qp * (y - qp)
                }
            }
            Kind::Numeric(n) => n.eval(y),
        }
    }

    /// `lim H(y)/y^2` of the internally shifted objective. Zero means a
    /// maximizing sequence gains nothing by pushing mass to infinity, which
    /// forces the worst case to be attained.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Declared supremum of the raw |h| over the tail.
    pub fn h_bound(&self) -> f64 {
        self.h_bound
    }

    /// Peak location of the quasi-concave profile, original axis.
    pub fn mode_c(&self) -> f64 {
        self.mode_c
    }

    /// Nonnegativity shift applied internally (zero for built-ins).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Whether `H` is closed-form rather than cached quadrature.
    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Threshold this objective was built for; `None` if any works.
    pub fn threshold(&self) -> Option<f64> {
        self.a
    }

    /// Kinks and jumps of h on the original axis.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Checks the objective was built for threshold `a` (constants match
    /// anything).
    pub fn compatible_with(&self, a: f64) -> bool {
        match self.a {
            None => true,
            Some(own) => num::close(own, a, 1e-9),
        }
    }
}

/// `(y + e^-y - 1) / y^2`, the shape factor of the exponential-utility `H`.
/// Series near zero avoids the catastrophic cancellation of the direct form.
fn exp_kernel(y: f64) -> f64 {
    if y < 0.5 {
        // sum_{j>=0} (-y)^j / (j+2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        let mut j = 0.0;
        while num::abs(term) > 1e-17 * num::abs(sum) {
            j += 1.0;
            term *= -y / (j + 2.0);
            sum += term;
        }
        sum
    } else {
        (y + num::expm1(-y)) / (y * y)
    }
}

/// Indicator of the open interval `(c, d)`, the tail-probability objective.
/// Requires `a <= c < d`.
pub fn make_interval_indicator(a: f64, c: f64, d: f64) -> Result<ObjectiveSpec> {
    for (name, v) in [("a", a), ("c", c), ("d", d)] {
        if !v.is_finite() {
            return Err(Error::InvalidObjective(format!("{name} must be finite, got {v}")));
        }
    }
    if d <= c {
        return Err(Error::InvalidObjective(format!(
            "interval requires c < d, got c={c}, d={d}"
        )));
    }
    if c < a {
        return Err(Error::InvalidObjective(format!(
            "interval must start at or after the threshold, got c={c} < a={a}"
        )));
    }
    Ok(ObjectiveSpec {
        kind: Kind::IntervalIndicator { c, d, cp: c - a, dp: d - a },
        a: Some(a),
        h_bound: 1.0,
        mode_c: 0.5 * (c + d),
        lambda: 0.0,
        shift: 0.0,
        analytic: true,
        warnings: Vec::new(),
        breakpoints: alloc::vec![c, d],
    })
}

/// Constant objective `h = level >= 0`; with `level = 1` the worst-case
/// bound must reproduce the tail mass itself.
pub fn make_constant(level: f64) -> Result<ObjectiveSpec> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(Error::InvalidObjective(format!(
            "constant level must be finite and >= 0, got {level}"
        )));
    }
    Ok(ObjectiveSpec {
        kind: Kind::Constant { level },
        a: None,
        h_bound: level,
        mode_c: f64::INFINITY,
        lambda: 0.5 * level,
        shift: 0.0,
        analytic: true,
        warnings: Vec::new(),
        breakpoints: Vec::new(),
    })
}

/// Capped call payoff: zero below `l`, `x - l` on `[l, u)`, `cap = u - l`
/// above. Requires `a <= l < u` and `cap = u - l` (anything else would break
/// the monotone profile with a jump at `u`).
pub fn make_stop_loss(a: f64, l: f64, u: f64, cap: f64) -> Result<ObjectiveSpec> {
    for (name, v) in [("a", a), ("l", l), ("u", u), ("cap", cap)] {
        if !v.is_finite() {
            return Err(Error::InvalidObjective(format!("{name} must be finite, got {v}")));
        }
    }
    if !(a <= l && l < u) {
        return Err(Error::InvalidObjective(format!(
            "need a <= l < u, got a={a}, l={l}, u={u}"
        )));
    }
    if !num::close(cap, u - l, 1e-12) {
        return Err(Error::InvalidObjective(format!(
            "cap must equal u - l = {}, got {cap}",
            u - l
        )));
    }
    Ok(ObjectiveSpec {
        kind: Kind::StopLoss { l, u, lp: l - a, up: u - a, cap },
        a: Some(a),
        h_bound: cap,
        mode_c: f64::INFINITY,
        // h tends to cap at infinity, so H(y)/y^2 -> cap/2.
        lambda: 0.5 * cap,
        shift: 0.0,
        analytic: true,
        warnings: Vec::new(),
        breakpoints: alloc::vec![l, u],
    })
}

/// `h(x) = exp(-theta x)`, the integrand of the entropic risk measure.
/// Non-increasing on the tail, so the peak sits at `a` itself.
pub fn make_exp_utility(a: f64, theta: f64) -> Result<ObjectiveSpec> {
    if !a.is_finite() || !theta.is_finite() {
        return Err(Error::InvalidObjective(format!("a and theta must be finite, got {a}, {theta}")));
    }
    if theta <= 0.0 {
        return Err(Error::InvalidObjective(format!("theta must be > 0, got {theta}")));
    }
    let scale = num::exp(-theta * a);
    Ok(ObjectiveSpec {
        kind: Kind::ExpUtility { theta, scale },
        a: Some(a),
        h_bound: scale,
        mode_c: a,
        lambda: 0.0,
        shift: 0.0,
        analytic: true,
        warnings: Vec::new(),
        breakpoints: Vec::new(),
    })
}

/// Unmet-demand penalty `h(x) = p * max(q - x, 0)` for order level `q`.
///
/// Via `p*min(q, x) = p*q - h(x)`, maximizing this objective turns the
/// worst-case (smallest) tail revenue into `p*q*beta - bound`. When
/// `q <= a` the tail part of `min(q, x)` is constant, so a constant-zero
/// objective is returned with a warning recorded.
pub fn make_newsvendor_shortfall(a: f64, p: f64, q: f64) -> Result<ObjectiveSpec> {
    for (name, v) in [("a", a), ("p", p), ("q", q)] {
        if !v.is_finite() {
            return Err(Error::InvalidObjective(format!("{name} must be finite, got {v}")));
        }
    }
    if p <= 0.0 {
        return Err(Error::InvalidObjective(format!("p must be > 0, got {p}")));
    }
    if q <= a {
        let mut zero = make_constant(0.0)?;
        zero.warnings.push(format!(
            "order level q={q} at or below threshold a={a}: shortfall vanishes on the tail"
        ));
        return Ok(zero);
    }
    Ok(ObjectiveSpec {
        kind: Kind::Shortfall { p, q, qp: q - a },
        a: Some(a),
        h_bound: p * (q - a),
        mode_c: a,
        lambda: 0.0,
        shift: 0.0,
        analytic: true,
        warnings: Vec::new(),
        breakpoints: alloc::vec![q],
    })
}

/// Wraps an arbitrary evaluator with default [`NumericConfig`].
pub fn make_numeric<F>(a: f64, h: F, h_bound: f64, lambda: f64, mode_c: f64) -> Result<ObjectiveSpec>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    make_numeric_with(a, h, h_bound, lambda, mode_c, &NumericConfig::default())
}

/// Wraps an arbitrary evaluator `h` (original axis) for threshold `a`.
///
/// `h` is validated by sampling over `[a, a + 100*scale]`: it must stay
/// within `[-h_bound, h_bound]` and be non-decreasing before `mode_c`,
/// non-increasing after. If sampled values dip below zero the whole
/// objective is shifted up by the sampled sup of |h| (recorded in
/// [`ObjectiveSpec::shift`]; the solvers undo it), and the declared
/// `lambda`, which always refers to the raw `h`, is adjusted internally.
///
/// `H` is cached on a grid by adaptive quadrature (relative tolerance
/// `rel_tol`); beyond the cached range the asymptote implied by the
/// declared `lambda` takes over. A Richardson estimate of `H(y)/y^2` at
/// large `y` cross-checks the declaration and records a warning when it
/// disagrees by more than 5%.
pub fn make_numeric_with<F>(
    a: f64,
    h: F,
    h_bound: f64,
    lambda: f64,
    mode_c: f64,
    cfg: &NumericConfig,
) -> Result<ObjectiveSpec>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !a.is_finite() {
        return Err(Error::InvalidObjective(format!("a must be finite, got {a}")));
    }
    if !(h_bound.is_finite() && h_bound > 0.0) {
        return Err(Error::InvalidObjective(format!(
            "h_bound must be finite and > 0, got {h_bound}"
        )));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidObjective(format!("lambda must be finite, got {lambda}")));
    }
    if !(cfg.samples >= 3 && cfg.cells >= 8) {
        return Err(Error::InvalidObjective(String::from(
            "numeric config needs at least 3 samples and 8 cells",
        )));
    }
    if !(cfg.scale.is_finite() && cfg.scale > 0.0) {
        return Err(Error::InvalidObjective(format!("scale must be > 0, got {}", cfg.scale)));
    }

    let span = 100.0 * cfg.scale;
    let n = cfg.samples;
    let mut min_h = f64::INFINITY;
    let mut max_abs = 0.0_f64;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let x = a + span * (i as f64) / ((n - 1) as f64);
        let v = h(x);
        if !v.is_finite() {
            return Err(Error::InvalidObjective(format!("h({x}) is not finite")));
        }
        if num::abs(v) > h_bound * (1.0 + 1e-12) {
            return Err(Error::InvalidObjective(format!(
                "sampled |h({x})| = {} exceeds the declared bound {h_bound}; \
                 unbounded objectives have an infinite worst case",
                num::abs(v)
            )));
        }
        min_h = min_h.min(v);
        max_abs = max_abs.max(num::abs(v));
        samples.push((x, v));
    }
    let qc_tol = 1e-10 * h_bound.max(1.0);
    for w in samples.windows(2) {
        let ((x0, v0), (x1, v1)) = (w[0], w[1]);
        if x1 <= mode_c && v1 < v0 - qc_tol {
            return Err(Error::InvalidObjective(format!(
                "h decreases before its declared peak ({x0} -> {x1}): not quasi-concave"
            )));
        }
        if x0 >= mode_c && v1 > v0 + qc_tol {
            return Err(Error::InvalidObjective(format!(
                "h increases after its declared peak ({x0} -> {x1}): not quasi-concave"
            )));
        }
    }

    let mut warnings = Vec::new();
    let shift = if min_h < 0.0 {
        warnings.push(format!(
            "h takes negative values (min sampled {min_h}); shifted up by {max_abs}"
        ));
        max_abs
    } else {
        0.0
    };
    let lambda_int = lambda + 0.5 * shift;
    let bound_int = h_bound + shift;
    if lambda_int < -1e-12 * bound_int.max(1.0) {
        return Err(Error::InvalidObjective(format!(
            "declared lambda {lambda} is below the admissible range for this objective"
        )));
    }
    let lambda_int = lambda_int.max(0.0);
    if lambda_int > 0.5 * bound_int * (1.0 + 1e-9) {
        return Err(Error::InvalidObjective(format!(
            "lambda cannot exceed half the bound: H(y)/y^2 <= sup h / 2 = {}",
            0.5 * bound_int
        )));
    }

    let numeric = NumericH::build(Box::new(h), a, shift, span, lambda_int, bound_int, cfg)?;

    // Cross-check the declared limit against the cached H at two probes.
    let x1 = (2.0 * span).max(1e4);
    let x2 = 10.0 * x1;
    let g1 = numeric.eval(x1) / (x1 * x1);
    let g2 = numeric.eval(x2) / (x2 * x2);
    let lambda_hat = (g2 * x2 - g1 * x1) / (x2 - x1);
    let gap = num::abs(lambda_hat - lambda_int);
    if gap > 0.05 * lambda_int.max(lambda_hat) && gap > 1e-6 * bound_int.max(1.0) {
        warnings.push(format!(
            "declared lambda {lambda} disagrees with the large-y behavior of H \
             (extrapolated {lambda_hat}); light/heavy classification may be wrong"
        ));
    }

    Ok(ObjectiveSpec {
        kind: Kind::Numeric(numeric),
        a: Some(a),
        h_bound,
        mode_c,
        lambda: lambda_int,
        shift,
        analytic: false,
        warnings,
        breakpoints: Vec::new(),
    })
}

/// Cached iterated integral for numeric objectives.
///
/// `nodes` are shifted coordinates; `anti[i]` is the antiderivative of the
/// shifted h at `nodes[i]` and `iter[i]` is `H` there, both accumulated by
/// per-cell adaptive quadrature. An evaluation inside a cell adds the exact
/// in-cell correction `integral (y - v) h(v + a) dv`; an evaluation beyond
/// the last node follows the declared-lambda asymptote.
struct NumericH {
    h: Evaluator,
    a: f64,
    shift: f64,
    nodes: Vec<f64>,
    anti: Vec<f64>,
    iter: Vec<f64>,
    lambda: f64,
    eval_tol: f64,
}

impl NumericH {
    fn build(
        h: Evaluator,
        a: f64,
        shift: f64,
        span: f64,
        lambda: f64,
        bound: f64,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        let far_max = 10.0 * (2.0 * span).max(1e4);
        let mut nodes = Vec::with_capacity(cfg.cells + 129);
        for i in 0..=cfg.cells {
            nodes.push(span * (i as f64) / (cfg.cells as f64));
        }
        // Geometric extension out to the lambda cross-check probes.
        let far_cells = 128;
        let ratio = num::exp(num::ln(far_max / span) / far_cells as f64);
        let mut x = span;
        for _ in 0..far_cells {
            x *= ratio;
            nodes.push(x);
        }
        let last = nodes.len() - 1;
        nodes[last] = far_max;

        let shifted = |v: f64| h(v + a) + shift;
        let mut anti = Vec::with_capacity(nodes.len());
        let mut iter = Vec::with_capacity(nodes.len());
        anti.push(0.0);
        iter.push(0.0);
        let budget = cfg.rel_tol * bound.max(1e-12) / (nodes.len() as f64);
        for i in 0..nodes.len() - 1 {
            let (n0, n1) = (nodes[i], nodes[i + 1]);
            let w = n1 - n0;
            let tol0 = budget * w.max(1.0);
            let i0 = adaptive_simpson(&shifted, n0, n1, tol0);
            let i1 = adaptive_simpson(&|v| (n1 - v) * shifted(v), n0, n1, tol0 * w.max(1.0));
            if !i0.is_finite() || !i1.is_finite() {
                return Err(Error::InvalidObjective(format!(
                    "quadrature of h failed on [{n0}, {n1}]"
                )));
            }
            anti.push(anti[i] + i0);
            iter.push(iter[i] + anti[i] * w + i1);
        }
        Ok(NumericH { h, a, shift, nodes, anti, iter, lambda, eval_tol: cfg.rel_tol })
    }

    fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let last = *self.nodes.last().expect("nonempty");
        if y >= last {
            let n = self.nodes.len() - 1;
            let t = y - last;
            return self.iter[n] + self.anti[n] * t + self.lambda * t * t;
        }
        let idx = match self.nodes.binary_search_by(|probe| probe.partial_cmp(&y).expect("finite")) {
            Ok(i) => return self.iter[i],
            Err(i) => i - 1,
        };
        let n0 = self.nodes[idx];
        let tol = self.eval_tol * self.iter[idx].abs().max(1.0);
        let correction =
            adaptive_simpson(&|v| (y - v) * ((self.h)(v + self.a) + self.shift), n0, y, tol);
        self.iter[idx] + self.anti[idx] * (y - n0) + correction
    }
}
