//! Worst-case bound when the tail parameters are only known up to a box.
//!
//! With `beta`, `eta` ranging over intervals and `nu` bounded above, the
//! bound is monotone enough that the optimum pins one moment to its box
//! edge: either the mean sits at its top and the second moment is free
//! (subproblem A), or the second moment sits at its top and the mean is
//! free (subproblem B). Each subproblem is an outer sweep over the free
//! coordinate around the same `x1` line search the point solver uses.

use alloc::vec::Vec;

use crate::domain::{
    consistency_check, density_from_measure, to_interval_moment_params, BoundResult, Consistency,
    Diagnostics, IntervalParams, Maximizer, MomentMeasure, MomentParams, PiecewiseLinearDensity,
    TailClass, TailParams,
};
use crate::num;
use crate::objective::ObjectiveSpec;
use crate::solver::point::{inner_sweep, InnerSweep};
use crate::solver::{golden_max, values_tie, SearchConfig};
use crate::{Error, Result};

/// Sharpest upper bound on the tail expectation of `obj` over all tail
/// parameters in the box described by `ip`.
///
/// The classification mirrors [`super::solve_point`]: the result is heavy
/// when the supremum is approached only by letting support escape to
/// infinity, in which case the density is the limiting triangle at the
/// maximizing mean. The reported maximizer always has its mean at the box
/// top or its second moment at the box top.
pub fn solve_interval(
    ip: &IntervalParams,
    obj: &ObjectiveSpec,
    cfg: &SearchConfig,
) -> Result<BoundResult> {
    ip.validate()?;
    cfg.validate()?;
    if !obj.compatible_with(ip.a) {
        return Err(Error::InvalidObjective(alloc::format!(
            "objective was built for threshold {:?}, solve asked for {}",
            obj.threshold(),
            ip.a
        )));
    }
    let b = to_interval_moment_params(ip);
    let nu = ip.nu_hi;
    let mut warnings: Vec<alloc::string::String> = obj.warnings().to_vec();

    // The box is feasible iff its most permissive corner is: smallest mean,
    // largest second moment.
    let probe = MomentParams { mu: b.mu_lo, sigma: b.sigma_hi };
    match consistency_check(&probe) {
        Consistency::Infeasible => {
            warnings.push(alloc::format!(
                "infeasible: eta_lo^2 = {} exceeds 2*beta_hi*nu_hi = {}",
                ip.eta_lo * ip.eta_lo,
                2.0 * ip.beta_hi * ip.nu_hi
            ));
            return Ok(BoundResult {
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
            });
        }
        Consistency::Boundary => {
            // Only one corner is feasible, and only just: the triangle with
            // height eta_lo and slope -nu_hi.
            let value = nu * obj.big_h(b.mu_lo) - obj.shift() * ip.beta_lo;
            let density = PiecewiseLinearDensity::new(
                ip.a,
                &[ip.a, ip.a + b.mu_lo],
                &[ip.eta_lo, 0.0],
                false,
            )?;
            return Ok(BoundResult {
                value: Some(value),
                tail_class: TailClass::DegenerateUnique,
                density: Some(density),
                maximizer: Some(Maximizer {
                    x1: b.mu_lo,
                    omega: Some(b.mu_lo),
                    rho: Some(b.sigma_hi),
                }),
                diagnostics: Diagnostics {
                    grid_points: 0,
                    outer_grid_points: None,
                    refine_iterations: 0,
                    achieved_tolerance: 0.0,
                    warnings,
                },
            });
        }
        Consistency::Strict => {}
    }

    // Subproblem A: mean pinned at mu_hi, second moment free. Empty when
    // even the largest second moment cannot support the largest mean.
    let rho_lo = b.sigma_lo.max(b.mu_hi * b.mu_hi);
    let sub_a = if rho_lo <= b.sigma_hi * (1.0 + 1e-12) {
        let sweep = |rho: f64| inner_sweep(b.mu_hi, rho, nu, obj, &cfg.inner);
        Some(solve_sub(&sweep, rho_lo.min(b.sigma_hi), b.sigma_hi, cfg))
    } else {
        None
    };
    // Subproblem B: second moment pinned at sigma_hi, mean free. Always
    // nonempty for a feasible box.
    let omega_hi = b.mu_hi.min(num::sqrt(b.sigma_hi));
    let sub_b = if omega_hi >= b.mu_lo {
        let sweep = |omega: f64| inner_sweep(omega, b.sigma_hi, nu, obj, &cfg.inner);
        Some(solve_sub(&sweep, b.mu_lo, omega_hi, cfg))
    } else {
        None
    };

    let use_a = match (&sub_a, &sub_b) {
        (Some(a), Some(bb)) => a.value >= bb.value || values_tie(a.value, bb.value),
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => {
            return Err(Error::InvalidParameter(alloc::format!(
                "no admissible moment pair in the box (mu in [{}, {}], sigma in [{}, {}])",
                b.mu_lo,
                b.mu_hi,
                b.sigma_lo,
                b.sigma_hi
            )))
        }
    };
    let winner = if use_a { sub_a.as_ref().unwrap() } else { sub_b.as_ref().unwrap() };
    let (winner_omega, winner_rho) =
        if use_a { (b.mu_hi, winner.outer) } else { (winner.outer, b.sigma_hi) };
    let value_raw = match (&sub_a, &sub_b) {
        (Some(a), Some(bb)) => a.value.max(bb.value),
        _ => winner.value,
    };

    // Interior candidates across both subproblems, subproblem A preferred
    // on ties.
    let mut best_interior: Option<(f64, f64, f64, bool)> = None;
    if let Some(a) = &sub_a {
        if let Some((v, x1, outer)) = a.interior {
            best_interior = Some((v, x1, outer, true));
        }
    }
    if let Some(bb) = &sub_b {
        if let Some((v, x1, outer)) = bb.interior {
            if best_interior.map(|(bv, ..)| v > bv && !values_tie(v, bv)).unwrap_or(true) {
                best_interior = Some((v, x1, outer, false));
            }
        }
    }
    let attained = obj.lambda() == 0.0
        || best_interior
            .map(|(v, ..)| v >= value_raw || values_tie(v, value_raw))
            .unwrap_or(false);

    let iterations = sub_a.as_ref().map(|s| s.iterations).unwrap_or(0)
        + sub_b.as_ref().map(|s| s.iterations).unwrap_or(0);
    let achieved = sub_a
        .as_ref()
        .map(|s| s.achieved_tol)
        .unwrap_or(0.0)
        .max(sub_b.as_ref().map(|s| s.achieved_tol).unwrap_or(0.0));

    let (tail_class, density, maximizer) = if attained {
        let (_, x1, outer, from_a) =
            best_interior.expect("interior maximizer exists when attained");
        let (omega, rho) = if from_a { (b.mu_hi, outer) } else { (outer, b.sigma_hi) };
        // The maximizing density belongs to the point problem with the
        // effective parameters implied by (omega, rho).
        let p_eff = TailParams::new(ip.a, nu * rho / 2.0, nu * omega, nu)?;
        let gap = rho - omega * omega;
        let measure = if gap <= 1e-12 * rho {
            MomentMeasure::new(&[omega], &[1.0])?
        } else {
            let d = gap + (omega - x1) * (omega - x1);
            let x2 = (rho - omega * x1) / (omega - x1);
            MomentMeasure::new(&[x1, x2], &[gap / d, (omega - x1) * (omega - x1) / d])?
        };
        let density = density_from_measure(&measure, &p_eff)?;
        (
            TailClass::AttainedLight,
            density,
            Maximizer { x1, omega: Some(omega), rho: Some(rho) },
        )
    } else {
        let triangle = PiecewiseLinearDensity::new(
            ip.a,
            &[ip.a, ip.a + winner_omega],
            &[nu * winner_omega, 0.0],
            true,
        )?;
        (
            TailClass::LimitingHeavy,
            triangle,
            Maximizer { x1: winner_omega, omega: Some(winner_omega), rho: Some(winner_rho) },
        )
    };

    Ok(BoundResult {
        value: Some(value_raw - obj.shift() * ip.beta_lo),
        tail_class,
        density: Some(density),
        maximizer: Some(maximizer),
        diagnostics: Diagnostics {
            grid_points: cfg.inner.grid_points,
            outer_grid_points: Some(cfg.outer_grid_points),
            refine_iterations: iterations,
            achieved_tolerance: achieved,
            warnings,
        },
    })
}

/// Result of one subproblem: the best outer coordinate found, plus the best
/// (value, x1, outer) triple whose `x1` stays clear of the degenerate limit.
struct SubOutcome {
    value: f64,
    outer: f64,
    /// (value, x1, outer) restricted to interior `x1`.
    interior: Option<(f64, f64, f64)>,
    iterations: usize,
    achieved_tol: f64,
}

/// Outer sweep over `[lo, hi]` with a full inner line search at every
/// point, then golden refinement of the outer coordinate around the best
/// bracket. Ties keep the earlier (smaller) outer point.
fn solve_sub<F: Fn(f64) -> InnerSweep>(sweep_at: &F, lo: f64, hi: f64, cfg: &SearchConfig) -> SubOutcome {
    let merge =
        |best: &mut Option<(f64, f64, f64)>, cand: Option<(f64, f64)>, outer: f64| {
            if let Some((v, x1)) = cand {
                if best.map(|(bv, ..)| v > bv).unwrap_or(true) {
                    *best = Some((v, x1, outer));
                }
            }
        };
    if hi - lo <= 0.0 {
        let s = sweep_at(lo);
        let mut interior = None;
        merge(&mut interior, s.interior, lo);
        return SubOutcome {
            value: s.value,
            outer: lo,
            interior,
            iterations: s.iterations,
            achieved_tol: s.achieved_tol,
        };
    }
    let n = cfg.outer_grid_points;
    let step = (hi - lo) / ((n - 1) as f64);
    let mut best_i = 0usize;
    let mut best: Option<(f64, f64)> = None;
    let mut interior: Option<(f64, f64, f64)> = None;
    let mut iterations = 0usize;
    let mut achieved: f64 = 0.0;
    for i in 0..n {
        let t = if i + 1 == n { hi } else { lo + step * (i as f64) };
        let s = sweep_at(t);
        iterations += s.iterations;
        achieved = achieved.max(s.achieved_tol);
        if best.map(|(bv, _)| s.value > bv).unwrap_or(true) {
            best = Some((s.value, t));
            best_i = i;
        }
        merge(&mut interior, s.interior, t);
    }
    let (mut value, mut outer) = best.expect("outer grid is nonempty");
    let bracket_lo = if best_i == 0 { lo } else { lo + step * ((best_i - 1) as f64) };
    let bracket_hi = if best_i + 1 >= n { hi } else { lo + step * ((best_i + 1) as f64) };
    let refined = golden_max(
        &|t: f64| sweep_at(t).value,
        bracket_lo,
        bracket_hi,
        cfg.inner.refine_tol * (hi - lo),
        cfg.inner.refine_max_iter,
    );
    iterations += refined.iterations;
    if refined.value > value {
        let s = sweep_at(refined.x);
        value = s.value;
        outer = refined.x;
        merge(&mut interior, s.interior, refined.x);
    }
    SubOutcome {
        value,
        outer,
        interior,
        iterations,
        achieved_tol: achieved.max(refined.achieved_tol / (hi - lo)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::to_moment_params;
    use crate::objective::{make_constant, make_interval_indicator, make_stop_loss};
    use crate::oracle::quadrature_objective;
    use crate::solver::{solve_point, LineSearchConfig};

    fn assert_close(x: f64, y: f64, tol: f64) {
        assert!(
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0),
            "expected {x} close to {y} (tol {tol})"
        );
    }

    #[test]
    fn unit_objective_returns_the_largest_tail_probability() {
        let ip = IntervalParams::new(0.0, 0.5, 0.8, 0.6, 0.9, 1.1, 0.1).unwrap();
        let one = make_constant(1.0).unwrap();
        let r = solve_interval(&ip, &one, &SearchConfig::default()).unwrap();
        assert_close(r.value.unwrap(), 0.8, 1e-9);
        assert_eq!(r.tail_class, TailClass::AttainedLight);
        let mx = r.maximizer.unwrap();
        assert_close(mx.rho.unwrap(), 2.0 * 0.8 / 1.1, 1e-9);
        let f = r.density.unwrap();
        assert_close(f.total_mass(), 0.8, 1e-9);
    }

    #[test]
    fn degenerate_box_matches_the_point_solver() {
        let p = TailParams::new(1.0, 0.3, 0.09, 0.054).unwrap();
        let ip = IntervalParams::from_point(&p, 0.1).unwrap();
        let obj = make_interval_indicator(1.0, 2.0, 4.0).unwrap();
        let point = solve_point(&p, &obj, &LineSearchConfig::default()).unwrap();
        let interval = solve_interval(&ip, &obj, &SearchConfig::default()).unwrap();
        assert_close(point.value.unwrap(), interval.value.unwrap(), 1e-6);
        assert_eq!(point.tail_class, interval.tail_class);
    }

    #[test]
    fn wider_boxes_never_shrink_the_bound() {
        let p = TailParams::new(1.0, 0.3, 0.09, 0.054).unwrap();
        let obj = make_interval_indicator(1.0, 2.0, 4.0).unwrap();
        let tight = IntervalParams::from_point(&p, 0.1).unwrap();
        let wide = IntervalParams::new(
            1.0,
            0.25,
            0.35,
            0.08,
            0.10,
            0.060,
            0.1,
        )
        .unwrap();
        let vt = solve_interval(&tight, &obj, &SearchConfig::default())
            .unwrap()
            .value
            .unwrap();
        let vw = solve_interval(&wide, &obj, &SearchConfig::default())
            .unwrap()
            .value
            .unwrap();
        assert!(vw >= vt - 1e-12, "wide {vw} should dominate tight {vt}");
    }

    #[test]
    fn maximizer_pins_a_moment_to_the_box_edge() {
        let ip = IntervalParams::new(1.0, 0.25, 0.35, 0.08, 0.10, 0.060, 0.1).unwrap();
        let b = to_interval_moment_params(&ip);
        let obj = make_interval_indicator(1.0, 2.0, 4.0).unwrap();
        let r = solve_interval(&ip, &obj, &SearchConfig::default()).unwrap();
        let mx = r.maximizer.unwrap();
        let at_mu_hi = (mx.omega.unwrap() - b.mu_hi).abs() <= 1e-9 * b.mu_hi;
        let at_sigma_hi = (mx.rho.unwrap() - b.sigma_hi).abs() <= 1e-9 * b.sigma_hi;
        assert!(at_mu_hi || at_sigma_hi, "maximizer {mx:?} pins neither moment");
        // The reported density is feasible for the effective parameters and
        // reproduces the bound.
        let f = r.density.unwrap();
        assert_close(quadrature_objective(&f, &obj), r.value.unwrap(), 1e-6);
    }

    #[test]
    fn boundary_box_is_degenerate_unique() {
        // eta_lo^2 = 2 * beta_hi * nu_hi exactly.
        let ip = IntervalParams::new(0.0, 0.4, 0.5, 1.0, 1.2, 1.0, 0.1).unwrap();
        let obj = make_interval_indicator(0.0, 0.2, 0.8).unwrap();
        let r = solve_interval(&ip, &obj, &SearchConfig::default()).unwrap();
        assert_eq!(r.tail_class, TailClass::DegenerateUnique);
        assert_close(r.value.unwrap(), obj.big_h(1.0), 1e-12);
        let f = r.density.unwrap();
        assert_eq!(f.knots(), &[0.0, 1.0]);
        assert_eq!(f.values(), &[1.0, 0.0]);
    }

    #[test]
    fn infeasible_box_reports_no_value() {
        let ip = IntervalParams::new(0.0, 0.2, 0.3, 1.0, 1.2, 1.0, 0.1).unwrap();
        let one = make_constant(1.0).unwrap();
        let r = solve_interval(&ip, &one, &SearchConfig::default()).unwrap();
        assert_eq!(r.tail_class, TailClass::Infeasible);
        assert!(r.value.is_none());
    }

    #[test]
    fn heavy_point_case_stays_heavy_for_the_degenerate_box() {
        let p = TailParams::new(0.0, 0.7, 0.7, 0.7).unwrap();
        let ip = IntervalParams::from_point(&p, 0.1).unwrap();
        let obj = make_stop_loss(0.0, 2.0, 3.0, 1.0).unwrap();
        let r = solve_interval(&ip, &obj, &SearchConfig::default()).unwrap();
        assert_eq!(r.tail_class, TailClass::LimitingHeavy);
        assert_close(r.value.unwrap(), 0.35, 1e-9);
        assert!(r.density.unwrap().limiting());
    }

    #[test]
    fn point_params_dominated_by_any_box_containing_them() {
        let p = TailParams::new(0.0, 0.7, 0.7, 0.7).unwrap();
        let m = to_moment_params(&p);
        assert_close(m.mu, 1.0, 1e-15);
        let obj = make_interval_indicator(0.0, 1.5, 2.5).unwrap();
        let point = solve_point(&p, &obj, &LineSearchConfig::default()).unwrap();
        let ip = IntervalParams::new(0.0, 0.65, 0.75, 0.65, 0.75, 0.72, 0.1).unwrap();
        let interval = solve_interval(&ip, &obj, &SearchConfig::default()).unwrap();
        assert!(interval.value.unwrap() >= point.value.unwrap() - 1e-12);
    }
}
