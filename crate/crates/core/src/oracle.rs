//! Brute-force verifiers used by tests and the acceptance suite.
//!
//! Everything here is deliberately slow and independent of the solvers: the
//! moment systems are solved by bisection and Lagrange interpolation instead
//! of the closed forms the solvers use, so a transcription slip there cannot
//! cancel out here. The grid oracles certify attained (light-tail) optima
//! only; support escaping to infinity is invisible at any finite grid, which
//! is why the two-point oracle also probes the degenerate limit value.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    consistency_check, density_from_measure, to_moment_params, Consistency, MomentMeasure,
    MomentParams, PiecewiseLinearDensity, TailParams,
};
use crate::num;
use crate::objective::ObjectiveSpec;
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// Solves the two-point moment system for a pinned smaller point `x1 < mu`:
/// weights `(p1, 1-p1)` on `(x1, x2)` with mean `mu` and raw second moment
/// `sigma`. For any candidate larger point the mean equation fixes
/// `p1 = (x2-mu)/(x2-x1)`, and the resulting second moment is increasing in
/// `x2` with constant slope `mu - x1`, so bisection on `x2` is exact and
/// stays well conditioned even when `x1` crowds the mean.
fn two_point_system(mu: f64, sigma: f64, x1: f64) -> (f64, f64) {
    let second = |x2: f64| {
        let p1 = (x2 - mu) / (x2 - x1);
        p1 * x1 * x1 + (1.0 - p1) * x2 * x2
    };
    // second(mu) = mu^2 < sigma, and second grows without bound.
    let mut lo = mu;
    let mut hi = 2.0 * mu + 1.0;
    while second(hi) < sigma {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if second(mid) <= sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x2 = 0.5 * (lo + hi);
    ((x2 - mu) / (x2 - x1), x2)
}

/// Largest `nu * (p1*H(x1) + p2*H(x2))` over two-point measures whose
/// smaller support point runs over a uniform `grid` on `[0, mu)`, plus the
/// degenerate limit at `x1 = mu`. Boundary parameters collapse to
/// `nu * H(mu)`.
pub fn grid_oracle_two_point(
    m: &MomentParams,
    obj: &ObjectiveSpec,
    nu: f64,
    grid: usize,
) -> f64 {
    let (mu, sigma) = (m.mu, m.sigma);
    let limit = nu * (obj.big_h(mu) + obj.lambda() * (sigma - mu * mu).max(0.0));
    if consistency_check(m) != Consistency::Strict {
        return nu * obj.big_h(mu);
    }
    let mut best = limit;
    for i in 0..grid {
        let x1 = mu * (i as f64) / (grid as f64);
        let (p1, x2) = two_point_system(mu, sigma, x1);
        let value = nu * (p1 * obj.big_h(x1) + (1.0 - p1) * obj.big_h(x2));
        if value > best {
            best = value;
        }
    }
    best
}

/// Largest `nu * sum p_i H(x_i)` over measures supported on two or three
/// points of a uniform `grid` on `[0, mu + 20*sqrt(sigma - mu^2)]`.
///
/// Weights come from Lagrange interpolation of the moment constraints;
/// candidate supports with a negative weight are infeasible and skipped.
/// Degenerate triples (two equal points) are covered by the pair sweep,
/// which accepts a pair only when it happens to reproduce the second
/// moment. Truncation at the grid edge means heavy-tail limiting values are
/// out of reach by construction; this oracle certifies attained optima.
pub fn grid_oracle_three_point(
    m: &MomentParams,
    obj: &ObjectiveSpec,
    nu: f64,
    grid: usize,
) -> f64 {
    let (mu, sigma) = (m.mu, m.sigma);
    if consistency_check(m) != Consistency::Strict {
        return nu * obj.big_h(mu);
    }
    let x_max = mu + 20.0 * num::sqrt(sigma - mu * mu);
    let nodes: Vec<f64> = (0..grid).map(|i| x_max * (i as f64) / ((grid - 1) as f64)).collect();
    let h: Vec<f64> = nodes.iter().map(|&x| obj.big_h(x)).collect();
    const WEIGHT_TOL: f64 = -1e-12;
    let mut best = f64::NEG_INFINITY;

    for i in 0..grid {
        for j in (i + 1)..grid {
            let (xi, xj) = (nodes[i], nodes[j]);
            let pi = (xj - mu) / (xj - xi);
            let pj = 1.0 - pi;
            if pi < WEIGHT_TOL || pj < WEIGHT_TOL {
                continue;
            }
            let second = pi * xi * xi + pj * xj * xj;
            if !num::close(second, sigma, 1e-9) {
                continue;
            }
            let value = nu * (pi.max(0.0) * h[i] + pj.max(0.0) * h[j]);
            if value > best {
                best = value;
            }
        }
    }
    for i in 0..grid {
        for j in (i + 1)..grid {
            for k in (j + 1)..grid {
                let (xi, xj, xk) = (nodes[i], nodes[j], nodes[k]);
                let pi = (sigma - (xj + xk) * mu + xj * xk) / ((xi - xj) * (xi - xk));
                if pi < WEIGHT_TOL {
                    continue;
                }
                let pj = (sigma - (xi + xk) * mu + xi * xk) / ((xj - xi) * (xj - xk));
                if pj < WEIGHT_TOL {
                    continue;
                }
                let pk = (sigma - (xi + xj) * mu + xi * xj) / ((xk - xi) * (xk - xj));
                if pk < WEIGHT_TOL {
                    continue;
                }
                let value =
                    nu * (pi.max(0.0) * h[i] + pj.max(0.0) * h[j] + pk.max(0.0) * h[k]);
                if value > best {
                    best = value;
                }
            }
        }
    }
    best
}

/// Draws a random measure with the exact moments `(mu, sigma)`: a two-point
/// draw pins the smaller support point uniformly and solves for the rest; a
/// three-point draw rejection-samples supports until all Lagrange weights
/// are positive. Boundary parameters admit only the point mass at `mu`.
pub fn random_feasible_measure(m: &MomentParams, seed: u64) -> Result<MomentMeasure> {
    let (mu, sigma) = (m.mu, m.sigma);
    if consistency_check(m) == Consistency::Infeasible {
        return Err(Error::InvalidParameter(alloc::format!(
            "no measure has mean {mu} and second moment {sigma} < mean^2"
        )));
    }
    if consistency_check(m) == Consistency::Boundary {
        return MomentMeasure::new(&[mu], &[1.0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = num::sqrt(sigma - mu * mu);
    for _ in 0..1000 {
        if rng.gen::<f64>() < 0.5 {
            // Two-point: any x1 in [0, mu) works; stay shy of mu so the
            // partner point does not blow up.
            let x1 = mu * 0.999 * rng.gen::<f64>();
            let (p1, x2) = two_point_system(mu, sigma, x1);
            if p1 > 0.0 && p1 < 1.0 && x2.is_finite() {
                return MomentMeasure::new(&[x1, x2], &[p1, 1.0 - p1]);
            }
        } else {
            let hi = mu + 10.0 * spread;
            let mut xs = [rng.gen::<f64>() * hi, rng.gen::<f64>() * hi, rng.gen::<f64>() * hi];
            xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let [x1, x2, x3] = xs;
            if x2 - x1 < 1e-9 * hi || x3 - x2 < 1e-9 * hi {
                continue;
            }
            let p1 = (sigma - (x2 + x3) * mu + x2 * x3) / ((x1 - x2) * (x1 - x3));
            let p2 = (sigma - (x1 + x3) * mu + x1 * x3) / ((x2 - x1) * (x2 - x3));
            let p3 = (sigma - (x1 + x2) * mu + x1 * x2) / ((x3 - x1) * (x3 - x2));
            if p1 > 1e-9 && p2 > 1e-9 && p3 > 1e-9 {
                return MomentMeasure::new(&[x1, x2, x3], &[p1, p2, p3]);
            }
        }
    }
    Err(Error::SamplingExhausted(alloc::format!(
        "no feasible measure found for (mu, sigma) = ({mu}, {sigma}) in 1000 draws"
    )))
}

/// Draws a random feasible tail density for `p` by sampling a measure with
/// the matching moments and mapping it through the correspondence. The
/// output always passes feasibility verification; that is the point.
pub fn random_feasible_density(
    m: &MomentParams,
    p: &TailParams,
    seed: u64,
) -> Result<PiecewiseLinearDensity> {
    let from_p = to_moment_params(p);
    if !num::close(from_p.mu, m.mu, 1e-9) || !num::close(from_p.sigma, m.sigma, 1e-9) {
        return Err(Error::CalibrationMismatch(alloc::format!(
            "moment params ({}, {}) do not match tail params (imply ({}, {}))",
            m.mu,
            m.sigma,
            from_p.mu,
            from_p.sigma
        )));
    }
    let measure = random_feasible_measure(m, seed)?;
    density_from_measure(&measure, p)
}

/// `integral of h(x) f(x) dx` over the density's support by adaptive
/// Simpson, split at the density's knots and the objective's breakpoints
/// so every piece is smooth. Integrates the raw objective (no shift).
pub fn quadrature_objective(f: &PiecewiseLinearDensity, obj: &ObjectiveSpec) -> f64 {
    let knots = f.knots();
    let lo = knots[0];
    let hi = *knots.last().expect("nonempty");
    let mut cuts: Vec<f64> = knots.to_vec();
    for &b in obj.breakpoints() {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let piece_mass = 0.5 * (f.eval(w[0]) + f.eval(w[1])) * (w[1] - w[0]);
        let tol = 1e-9 * (obj.h_bound() * piece_mass).max(1e-12);
        total += adaptive_simpson(&|x| obj.h(x) * f.eval(x), w[0], w[1], tol);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::verify_density_feasibility;
    use crate::objective::{make_constant, make_interval_indicator};

    fn assert_close(x: f64, y: f64, tol: f64) {
        assert!(
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0),
            "expected {x} close to {y} (tol {tol})"
        );
    }

    #[test]
    fn two_point_system_reproduces_moments() {
        let (mu, sigma) = (1.0, 2.0);
        for &x1 in &[0.0, 0.3, 0.5, 0.9, 0.999] {
            let (p1, x2) = two_point_system(mu, sigma, x1);
            assert!(p1 > 0.0 && p1 < 1.0);
            assert!(x2 > mu);
            assert_close(p1 * x1 + (1.0 - p1) * x2, mu, 1e-12);
            assert_close(p1 * x1 * x1 + (1.0 - p1) * x2 * x2, sigma, 1e-12);
        }
        // x1 = 0 has the classic closed form p1 = 1 - mu^2/sigma, x2 = sigma/mu.
        let (p1, x2) = two_point_system(1.0, 2.0, 0.0);
        assert_close(p1, 0.5, 1e-12);
        assert_close(x2, 2.0, 1e-12);
    }

    #[test]
    fn unit_objective_recovers_tail_mass() {
        // h = 1: every feasible measure scores nu*sigma/2 = beta.
        let p = TailParams::new(0.0, 0.7, 0.7, 0.7).unwrap();
        let m = to_moment_params(&p);
        let one = make_constant(1.0).unwrap();
        assert_close(grid_oracle_two_point(&m, &one, p.nu, 500), 0.7, 1e-12);
        assert_close(grid_oracle_three_point(&m, &one, p.nu, 40), 0.7, 1e-9);
    }

    #[test]
    fn boundary_collapses_to_unique_value() {
        let p = TailParams::new(0.0, 0.5, 1.0, 1.0).unwrap();
        let m = to_moment_params(&p);
        let obj = make_interval_indicator(0.0, 0.2, 0.8).unwrap();
        let expected = p.nu * obj.big_h(1.0);
        assert_close(grid_oracle_two_point(&m, &obj, p.nu, 500), expected, 1e-12);
        assert_close(grid_oracle_three_point(&m, &obj, p.nu, 40), expected, 1e-12);
    }

    #[test]
    fn three_point_never_beats_two_point() {
        let p = TailParams::new(0.0, 0.7, 0.7, 0.7).unwrap();
        let m = to_moment_params(&p);
        let obj = make_interval_indicator(0.0, 1.5, 2.5).unwrap();
        let two = grid_oracle_two_point(&m, &obj, p.nu, 2000);
        let three = grid_oracle_three_point(&m, &obj, p.nu, 60);
        assert!(
            three <= two + 1e-6,
            "three-point {three} should not beat two-point {two}"
        );
    }

    #[test]
    fn random_measures_hit_the_moments() {
        let m = MomentParams::new(1.0, 2.0).unwrap();
        for seed in 0..50 {
            let measure = random_feasible_measure(&m, seed).unwrap();
            let (m1, m2) = measure.moments();
            assert_close(m1, 1.0, 1e-9);
            assert_close(m2, 2.0, 1e-9);
        }
    }

    #[test]
    fn random_densities_are_feasible() {
        let p = TailParams::new(1.0, 0.3, 0.09, 0.054).unwrap();
        let m = to_moment_params(&p);
        for seed in 0..50 {
            let f = random_feasible_density(&m, &p, seed).unwrap();
            let rep = verify_density_feasibility(&f, &p, 1e-9);
            assert!(rep.all_pass(), "seed {seed}: {rep:?}");
        }
        // Same seed, same density.
        let f1 = random_feasible_density(&m, &p, 42).unwrap();
        let f2 = random_feasible_density(&m, &p, 42).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn boundary_params_give_the_triangle() {
        let p = TailParams::new(0.0, 0.5, 1.0, 1.0).unwrap();
        let m = to_moment_params(&p);
        let f = random_feasible_density(&m, &p, 7).unwrap();
        assert_eq!(f.knots(), &[0.0, 1.0]);
        assert_eq!(f.values(), &[1.0, 0.0]);
    }

    #[test]
    fn mismatched_params_are_rejected() {
        let p = TailParams::new(0.0, 0.5, 1.0, 1.0).unwrap();
        let wrong = MomentParams::new(2.0, 5.0).unwrap();
        assert!(matches!(
            random_feasible_density(&wrong, &p, 0),
            Err(Error::CalibrationMismatch(_))
        ));
    }

    #[test]
    fn quadrature_against_closed_forms() {
        let tri = PiecewiseLinearDensity::new(0.0, &[0.0, 1.0], &[1.0, 0.0], false).unwrap();
        // integral over (0.2, 0.5) of (1 - x) dx = 0.195.
        let ind = make_interval_indicator(0.0, 0.2, 0.5).unwrap();
        assert_close(quadrature_objective(&tri, &ind), 0.195, 1e-9);
        // h = 1 returns the mass.
        let one = make_constant(1.0).unwrap();
        assert_close(quadrature_objective(&tri, &one), 0.5, 1e-9);
    }
}
