//! Worst-case bound for exactly known tail parameters.

use alloc::vec::Vec;

use crate::domain::{
    consistency_check, density_from_measure, to_moment_params, BoundResult, Consistency,
    Diagnostics, Maximizer, MomentMeasure, PiecewiseLinearDensity, TailClass, TailParams,
};
use crate::objective::ObjectiveSpec;
use crate::solver::{
    golden_refine_around, two_point_value_unchecked, LineSearchConfig, LIMIT_GUARD_REL,
};
use crate::{Error, Result};

/// Sharpest upper bound on the tail expectation of `obj` when the tail
/// parameters are known exactly.
///
/// The search sweeps the smaller support point `x1` of the candidate
/// two-point measures across `[0, mean]` and refines the best bracket by
/// golden section. The endpoint `x1 = mean` stands for the degenerate limit
/// where the larger point escapes to infinity; when that limit is the only
/// way to reach the supremum the result is classified heavy and the returned
/// density is the limiting triangle rather than a maximizer.
pub fn solve_point(
    p: &TailParams,
    obj: &ObjectiveSpec,
    cfg: &LineSearchConfig,
) -> Result<BoundResult> {
    p.validate()?;
    cfg.validate()?;
    if !obj.compatible_with(p.a) {
        return Err(Error::InvalidObjective(alloc::format!(
            "objective was built for threshold {:?}, solve asked for {}",
            obj.threshold(),
            p.a
        )));
    }
    let m = to_moment_params(p);
    let mut warnings: Vec<alloc::string::String> = obj.warnings().to_vec();

    match consistency_check(&m) {
        Consistency::Infeasible => {
            warnings.push(alloc::format!(
                "infeasible: eta^2 = {} exceeds 2*beta*nu = {}",
                p.eta * p.eta,
                2.0 * p.beta * p.nu
            ));
            Ok(BoundResult {
                value: None,
                tail_class: TailClass::Infeasible,
                density: None,
                maximizer: None,
                diagnostics: Diagnostics {
                    grid_points: 0,
                    outer_grid_points: None,
                    refine_iterations: 0,
                    achieved_tolerance: 0.0,
                    warnings,
                },
            })
        }
        Consistency::Boundary => {
            let measure = MomentMeasure::new(&[m.mu], &[1.0])?;
            let density = density_from_measure(&measure, p)?;
            let value = p.nu * obj.big_h(m.mu) - obj.shift() * p.beta;
            Ok(BoundResult {
                value: Some(value),
                tail_class: TailClass::DegenerateUnique,
                density: Some(density),
                maximizer: Some(Maximizer { x1: m.mu, omega: None, rho: None }),
                diagnostics: Diagnostics {
                    grid_points: 0,
                    outer_grid_points: None,
                    refine_iterations: 0,
                    achieved_tolerance: 0.0,
                    warnings,
                },
            })
        }
        Consistency::Strict => {
            let sweep = inner_sweep(m.mu, m.sigma, p.nu, obj, cfg);
            let value_raw = sweep.value;
            let attained = obj.lambda() == 0.0
                || sweep
                    .interior
                    .map(|(v, _)| super::values_tie(v, value_raw) || v >= value_raw)
                    .unwrap_or(false);
            let (tail_class, density, maximizer) = if attained {
                let (_, x1) = sweep.interior.expect("interior maximizer exists when attained");
                let gap = m.sigma - m.mu * m.mu;
                let d = gap + (m.mu - x1) * (m.mu - x1);
                let x2 = (m.sigma - m.mu * x1) / (m.mu - x1);
                let measure =
                    MomentMeasure::new(&[x1, x2], &[gap / d, (m.mu - x1) * (m.mu - x1) / d])?;
                let density = density_from_measure(&measure, p)?;
                (
                    TailClass::AttainedLight,
                    density,
                    Maximizer { x1, omega: None, rho: None },
                )
            } else {
                let triangle = PiecewiseLinearDensity::new(
                    p.a,
                    &[p.a, p.a + m.mu],
                    &[p.eta, 0.0],
                    true,
                )?;
                (
                    TailClass::LimitingHeavy,
                    triangle,
                    Maximizer { x1: m.mu, omega: None, rho: None },
                )
            };
            Ok(BoundResult {
                value: Some(value_raw - obj.shift() * p.beta),
                tail_class,
                density: Some(density),
                maximizer: Some(maximizer),
                diagnostics: Diagnostics {
                    grid_points: cfg.grid_points,
                    outer_grid_points: None,
                    refine_iterations: sweep.iterations,
                    achieved_tolerance: sweep.achieved_tol,
                    warnings,
                },
            })
        }
    }
}

/// One full pass of the `x1` line search at fixed moments: uniform grid over
/// `[0, mean]` (the top endpoint evaluating the degenerate limit), golden
/// refinement around the best bracket, and separate book-keeping for the
/// candidates outside the limit guard band.
pub(crate) struct InnerSweep {
    pub value: f64,
    /// Best interior value, paired with the smallest interior `x1` whose
    /// value ties it (or ties the global max when the interior reaches it).
    pub interior: Option<(f64, f64)>,
    pub iterations: usize,
    pub achieved_tol: f64,
}

pub(crate) fn inner_sweep(
    mean: f64,
    second: f64,
    nu: f64,
    obj: &ObjectiveSpec,
    cfg: &LineSearchConfig,
) -> InnerSweep {
    let f = |x1: f64| two_point_value_unchecked(x1, mean, second, nu, obj);
    let cap = mean * (1.0 - LIMIT_GUARD_REL);
    let n = cfg.grid_points;
    let step = mean / ((n - 1) as f64);
    let x_at = |i: usize| if i + 1 == n { mean } else { step * (i as f64) };
    let vals: Vec<f64> = (0..n).map(|i| f(x_at(i))).collect();
    let mut best_i = 0usize;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[best_i] {
            best_i = i;
        }
    }
    let refined = golden_refine_around(&f, best_i, n, 0.0, mean, cfg);
    let value = vals[best_i].max(refined.value);

    let refined_interior = refined.x <= cap;
    let mut interior_max = f64::NEG_INFINITY;
    for (i, &v) in vals.iter().enumerate() {
        if x_at(i) > cap {
            break;
        }
        if v > interior_max {
            interior_max = v;
        }
    }
    if refined_interior {
        interior_max = interior_max.max(refined.value);
    }
    let interior = if interior_max > f64::NEG_INFINITY {
        // The mathematically flat stretches of the landscape show up as
        // fp-noise plateaus; the tie band collapses them to the leftmost
        // point, so the reported maximizer is deterministic.
        let anchor = if super::values_tie(interior_max, value) { value } else { interior_max };
        let ties = |v: f64| v >= anchor || super::values_tie(v, anchor);
        let mut x1: Option<f64> = None;
        for (i, &v) in vals.iter().enumerate() {
            let x = x_at(i);
            if x > cap {
                break;
            }
            if ties(v) {
                x1 = Some(x);
                break;
            }
        }
        if refined_interior && ties(refined.value) {
            x1 = Some(match x1 {
                Some(gx) if gx <= refined.x => gx,
                _ => refined.x,
            });
        }
        x1.map(|x| (interior_max, x))
    } else {
        None
    };
    InnerSweep { value, interior, iterations: refined.iterations, achieved_tol: refined.achieved_tol }
}
