//! Peaks-over-threshold baseline: generalized Pareto fits above a threshold
//! and delta-method confidence intervals for tail interval probabilities.
//!
//! This is the conventional extreme-value approach the worst-case bounds are
//! compared against. It is intentionally standard: maximum likelihood on the
//! excesses, observed information by finite differences, first-order delta
//! method for derived probabilities.

use crate::dist::norm_quantile;
use crate::estimation::Sample;
use crate::{Error, Result};

/// Shape/scale switch below which the exponential branch is used.
const ZETA_EXP_BRANCH: f64 = 1e-10;

/// Generalized Pareto cdf `1 - (1 + zeta*x/beta_g)^(-1/zeta)` for `x >= 0`.
///
/// Near `zeta = 0` this continuously becomes `1 - exp(-x/beta_g)`. For
/// negative shapes the support ends at `-beta_g/zeta`; beyond it the cdf
/// is 1.
pub fn gpd_cdf(x: f64, zeta: f64, beta_g: f64) -> f64 {
    assert!(beta_g > 0.0, "gpd scale must be positive, got {beta_g}");
    if x <= 0.0 {
        return 0.0;
    }
    if zeta.abs() <= ZETA_EXP_BRANCH {
        return -(-x / beta_g).exp_m1();
    }
    let t = 1.0 + zeta * x / beta_g;
    if t <= 0.0 {
        return 1.0;
    }
    1.0 - t.powf(-1.0 / zeta)
}

/// Gradient of `gpd_cdf` in `(zeta, beta_g)`, with the analytic limit at
/// `zeta = 0`. Zero beyond the support end where the cdf is flat at 1.
fn gpd_cdf_gradient(x: f64, zeta: f64, beta_g: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if zeta.abs() <= ZETA_EXP_BRANCH {
        let s = (-x / beta_g).exp();
        return (-s * x * x / (2.0 * beta_g * beta_g), -s * x / (beta_g * beta_g));
    }
    let t = 1.0 + zeta * x / beta_g;
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let survival = t.powf(-1.0 / zeta);
    let d_zeta = -survival * (t.ln() / (zeta * zeta) - x / (zeta * beta_g * t));
    let d_beta = -(x / (beta_g * beta_g)) * t.powf(-1.0 / zeta - 1.0);
    (d_zeta, d_beta)
}

/// A fitted generalized Pareto model for threshold excesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdParams {
    pub zeta: f64,
    pub beta_g: f64,
    /// Covariance of `(zeta, beta_g)` from the inverse observed information.
    pub covariance: [[f64; 2]; 2],
}

/// Negative log-likelihood of the excesses; infinite outside the support.
fn gpd_nll(zeta: f64, beta_g: f64, xs: &[f64]) -> f64 {
    if !(beta_g > 0.0) {
        return f64::INFINITY;
    }
    let n = xs.len() as f64;
    if zeta.abs() <= ZETA_EXP_BRANCH {
        let sum: f64 = xs.iter().sum();
        return n * beta_g.ln() + sum / beta_g;
    }
    let mut acc = 0.0;
    for &x in xs {
        let t = 1.0 + zeta * x / beta_g;
        if t <= 0.0 {
            return f64::INFINITY;
        }
        acc += t.ln();
    }
    n * beta_g.ln() + (1.0 + 1.0 / zeta) * acc
}

/// Downhill-simplex minimization of `f` from `start`, used only for the
/// 2-parameter likelihood where derivative-free is plenty.
fn nelder_mead<F: Fn(&[f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    scale: [f64; 2],
    max_iter: usize,
) -> ([f64; 2], f64, bool) {
    let mut pts = [start, start, start];
    pts[1][0] += scale[0];
    pts[2][1] += scale[1];
    let mut vals = [f(&pts[0]), f(&pts[1]), f(&pts[2])];

    let order = |pts: &mut [[f64; 2]; 3], vals: &mut [f64; 3]| {
        for i in 0..2 {
            for j in (i + 1)..3 {
                if vals[j] < vals[i] {
                    vals.swap(i, j);
                    pts.swap(i, j);
                }
            }
        }
    };

    for _ in 0..max_iter {
        order(&mut pts, &mut vals);
        let diam = (0..2)
            .map(|k| (pts[0][k] - pts[1][k]).abs().max((pts[0][k] - pts[2][k]).abs()))
            .fold(0.0f64, f64::max);
        if vals[2] - vals[0] < 1e-11 * (1.0 + vals[0].abs()) && diam < 1e-9 {
            return (pts[0], vals[0], true);
        }
        let centroid = [(pts[0][0] + pts[1][0]) / 2.0, (pts[0][1] + pts[1][1]) / 2.0];
        let reflect = |t: f64| {
            [centroid[0] + t * (centroid[0] - pts[2][0]), centroid[1] + t * (centroid[1] - pts[2][1])]
        };
        let xr = reflect(1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = reflect(2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[2] = xe;
                vals[2] = fe;
            } else {
                pts[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = xr;
            vals[2] = fr;
        } else {
            let xc = reflect(-0.5);
            let fc = f(&xc);
            if fc < vals[2] {
                pts[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    for k in 0..2 {
                        pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
                    }
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    order(&mut pts, &mut vals);
    (pts[0], vals[0], false)
}

/// Maximum-likelihood generalized Pareto fit to positive excesses.
///
/// Optimizes over `(zeta, ln beta_g)` so the scale stays positive, starting
/// from moment estimates. The covariance comes from inverting the observed
/// information, computed by central finite differences.
///
/// # Errors
///
/// Needs at least 10 strictly positive excesses with some spread; fails on
/// non-convergence or a non-positive-definite information matrix.
pub fn gpd_fit_mle(excesses: &Sample) -> Result<GpdParams> {
    let xs = excesses.values();
    if xs.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "generalized Pareto fit needs at least 10 excesses, got {}",
            xs.len()
        )));
    }
    if xs[0] <= 0.0 {
        return Err(Error::InvalidInput("excesses must be strictly positive".into()));
    }
    let m = excesses.mean();
    let sd = excesses.sd();
    if sd <= 0.0 {
        return Err(Error::FitFailure(
            "all excesses are equal; the likelihood is degenerate".into(),
        ));
    }

    // Moment starting point: mean = beta/(1-zeta), var = mean^2/(1-2 zeta).
    let v = sd * sd;
    let zeta0 = (0.5 * (1.0 - m * m / v)).clamp(-0.45, 0.9);
    let beta0 = (m * (1.0 - zeta0)).max(1e-8 * m);

    let obj = |t: &[f64; 2]| gpd_nll(t[0], t[1].exp(), xs);
    let (t_star, nll_star, converged) =
        nelder_mead(obj, [zeta0, beta0.ln()], [0.1, 0.1], 2000);
    if !converged || !nll_star.is_finite() {
        return Err(Error::FitFailure(format!(
            "likelihood optimization did not converge (best nll {nll_star}, \
             shape {}, scale {})",
            t_star[0],
            t_star[1].exp()
        )));
    }
    let zeta = t_star[0];
    let beta_g = t_star[1].exp();

    // Observed information by central differences in the original
    // coordinates; its inverse is the MLE covariance.
    let h0 = 1e-5 * zeta.abs().max(1e-2);
    let h1 = 1e-5 * beta_g;
    let f = |z: f64, b: f64| gpd_nll(z, b, xs);
    let f00 = (f(zeta + h0, beta_g) - 2.0 * nll_star + f(zeta - h0, beta_g)) / (h0 * h0);
    let f11 = (f(zeta, beta_g + h1) - 2.0 * nll_star + f(zeta, beta_g - h1)) / (h1 * h1);
    let f01 = (f(zeta + h0, beta_g + h1) - f(zeta + h0, beta_g - h1)
        - f(zeta - h0, beta_g + h1)
        + f(zeta - h0, beta_g - h1))
        / (4.0 * h0 * h1);
    let det = f00 * f11 - f01 * f01;
    if !(f00 > 0.0 && det > 0.0 && det.is_finite()) {
        return Err(Error::FitFailure(format!(
            "observed information is not positive definite at the fit \
             (diagonal {f00}, {f11}, determinant {det})"
        )));
    }
    let covariance = [[f11 / det, -f01 / det], [-f01 / det, f00 / det]];
    Ok(GpdParams { zeta, beta_g, covariance })
}

/// Point estimate and delta-method confidence interval from
/// `gpd_interval_prob_ci`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdIntervalEstimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub params: GpdParams,
    pub exceedances: usize,
}

/// Estimates `P(c <= X <= d)` by a generalized Pareto tail model above `u`
/// and wraps it in a two-sided delta-method interval at level `1 - alpha`.
///
/// The tail model is `(1 - F_n(u)) * G(x - u)` with `F_n` the empirical cdf
/// at `u` and `G` the fitted excess cdf. The variance propagates only the
/// `(zeta, beta_g)` uncertainty through the analytic cdf gradient; the
/// interval is left unclamped, so its lower end can be negative.
pub fn gpd_interval_prob_ci(
    s: &Sample,
    u: f64,
    c: f64,
    d: f64,
    alpha: f64,
) -> Result<GpdIntervalEstimate> {
    if !(u < c && c <= d) {
        return Err(Error::InvalidInput(format!(
            "need threshold < c <= d, got u={u}, c={c}, d={d}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let excess: Vec<f64> = s.values().iter().filter(|&&x| x > u).map(|&x| x - u).collect();
    let exceedances = excess.len();
    if exceedances < 10 {
        return Err(Error::FitFailure(format!(
            "only {exceedances} observations exceed u = {u}; not enough to fit a tail model"
        )));
    }
    let params = gpd_fit_mle(&Sample::new(excess)?)?;

    let below = s.values().iter().filter(|&&x| x <= u).count();
    let tail_frac = 1.0 - below as f64 / s.n() as f64;

    let (zeta, beta_g) = (params.zeta, params.beta_g);
    let point = tail_frac * (gpd_cdf(d - u, zeta, beta_g) - gpd_cdf(c - u, zeta, beta_g));
    let gd = gpd_cdf_gradient(d - u, zeta, beta_g);
    let gc = gpd_cdf_gradient(c - u, zeta, beta_g);
    let grad = [tail_frac * (gd.0 - gc.0), tail_frac * (gd.1 - gc.1)];
    let cv = params.covariance;
    let var = grad[0] * grad[0] * cv[0][0]
        + 2.0 * grad[0] * grad[1] * cv[0][1]
        + grad[1] * grad[1] * cv[1][1];
    let half = norm_quantile(1.0 - alpha / 2.0) * var.max(0.0).sqrt();
    Ok(GpdIntervalEstimate { point, lo: point - half, hi: point + half, params, exceedances })
}
