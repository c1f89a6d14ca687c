//! Calibrating tail parameters from raw samples.
//!
//! The solvers need `(beta, eta, nu)` at the threshold: tail probability,
//! density value, and a bound on the one-sided density slope. None of these
//! are observable directly, so this module estimates them with a Gaussian
//! kernel density estimator and turns bootstrap percentile intervals into
//! the `IntervalParams` box the robust solver consumes. A threshold
//! diagnostic suggests where convexity plausibly starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailbound_core::IntervalParams;

use crate::dist::{norm_cdf, norm_pdf};
use crate::{Error, Result};

/// Observations held sorted ascending.
///
/// Calibration quality degrades quickly below a few dozen points; the
/// constructor accepts any nonempty finite data so degenerate cases stay
/// testable, and `bootstrap_interval_params` attaches a warning when the
/// sample is smaller than 20.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample contains non-finite values".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
        Ok(Sample { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// Sample standard deviation (n-1 denominator); zero for a single point.
    pub fn sd(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Linear-interpolation quantile (R type 7) of the sorted values.
    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.values, p)
    }

    pub fn iqr(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "quantile needs p in [0,1], got {p}");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// How the kernel bandwidths are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// 0.9 * min(sd, IQR/1.34) * n^(-1/5).
    Silverman,
    /// A caller-supplied bandwidth, must be positive.
    Fixed(f64),
}

/// Settings for the kernel estimators. The kernel itself is always Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    pub bandwidth_rule: BandwidthRule,
    /// Multiplier applied to the density bandwidth when estimating the
    /// derivative. Derivatives need more smoothing; the default widens by
    /// n^(2/35), the gap between the n^(-1/5) and n^(-1/7) optimal rates.
    pub derivative_bandwidth_factor: Option<f64>,
    /// Estimate the tail probability by the empirical survival function
    /// instead of kernel smoothing.
    pub ecdf_tail: bool,
    /// Floor applied to nonpositive bootstrap interval endpoints.
    pub endpoint_floor: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            bandwidth_rule: BandwidthRule::Silverman,
            derivative_bandwidth_factor: None,
            ecdf_tail: false,
            endpoint_floor: 1e-12,
        }
    }
}

impl KdeConfig {
    pub fn density_bandwidth(&self, s: &Sample) -> Result<f64> {
        match self.bandwidth_rule {
            BandwidthRule::Fixed(b) => {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "fixed bandwidth must be > 0, got {b}"
                    )));
                }
                Ok(b)
            }
            BandwidthRule::Silverman => {
                let spread = s.sd().min(s.iqr() / 1.34);
                if spread <= 0.0 {
                    return Err(Error::Calibration(
                        "sample has no spread; Silverman bandwidth is zero, use a fixed bandwidth"
                            .into(),
                    ));
                }
                Ok(0.9 * spread * (s.n() as f64).powf(-0.2))
            }
        }
    }

    pub fn derivative_bandwidth(&self, s: &Sample) -> Result<f64> {
        let factor = match self.derivative_bandwidth_factor {
            Some(f) => {
                if !(f.is_finite() && f > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "derivative bandwidth factor must be > 0, got {f}"
                    )));
                }
                f
            }
            None => (s.n() as f64).powf(2.0 / 35.0),
        };
        Ok(self.density_bandwidth(s)? * factor)
    }
}

/// Gaussian kernel density estimate at `x`.
pub fn kde_density(s: &Sample, x: f64, cfg: &KdeConfig) -> Result<f64> {
    let b = cfg.density_bandwidth(s)?;
    let sum: f64 = s.values().iter().map(|&xi| norm_pdf((x - xi) / b)).sum();
    Ok(sum / (s.n() as f64 * b))
}

/// Derivative of the kernel density estimate at `x`, using the wider
/// derivative bandwidth.
pub fn kde_derivative(s: &Sample, x: f64, cfg: &KdeConfig) -> Result<f64> {
    let b = cfg.derivative_bandwidth(s)?;
    // d/dx phi((x - xi)/b) / b = -z phi(z) / b^2 with z = (x - xi)/b.
    let sum: f64 = s
        .values()
        .iter()
        .map(|&xi| {
            let z = (x - xi) / b;
            -z * norm_pdf(z)
        })
        .sum();
    Ok(sum / (s.n() as f64 * b * b))
}

/// Estimated `P(X > a)`: kernel-smoothed by default, the empirical survival
/// fraction when `cfg.ecdf_tail` is set.
pub fn tail_prob(s: &Sample, a: f64, cfg: &KdeConfig) -> Result<f64> {
    if cfg.ecdf_tail {
        let above = s.values().iter().filter(|&&x| x > a).count();
        return Ok(above as f64 / s.n() as f64);
    }
    let b = cfg.density_bandwidth(s)?;
    let sum: f64 = s.values().iter().map(|&xi| norm_cdf((xi - a) / b)).sum();
    Ok(sum / s.n() as f64)
}

/// Output of `bootstrap_interval_params`: the interval box for the robust
/// solver plus the point estimates it was built around.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedParams {
    pub params: IntervalParams,
    pub beta_hat: f64,
    pub eta_hat: f64,
    pub nu_hat: f64,
    pub warnings: Vec<String>,
}

fn estimate_triple(s: &Sample, a: f64, cfg: &KdeConfig) -> Result<(f64, f64, f64)> {
    Ok((tail_prob(s, a, cfg)?, kde_density(s, a, cfg)?, -kde_derivative(s, a, cfg)?))
}

/// Percentile-bootstrap calibration of the interval box at threshold `a`.
///
/// Draws `b_reps` resamples with replacement and re-estimates all three
/// parameters on each. The joint level is split three ways (Bonferroni):
/// two-sided intervals at level `1 - alpha/3` for the tail probability and
/// the density, a one-sided upper bound for the slope. Resample `b` draws
/// from a ChaCha stream numbered `b + 1` derived from `seed`, so runs are
/// reproducible and stream 0 stays free for callers layering their own
/// draws on the same seed.
///
/// # Errors
///
/// Fails when the slope point estimate is nonpositive, which means the
/// estimated density is not decreasing at `a` and the threshold sits outside
/// the convex region. Nonpositive interval endpoints are clamped to
/// `cfg.endpoint_floor` with a warning instead.
pub fn bootstrap_interval_params(
    s: &Sample,
    a: f64,
    alpha: f64,
    b_reps: usize,
    cfg: &KdeConfig,
    seed: u64,
) -> Result<CalibratedParams> {
    if b_reps < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 bootstrap resamples, got {b_reps}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let (beta_hat, eta_hat, nu_hat) = estimate_triple(s, a, cfg)?;
    if nu_hat <= 0.0 {
        return Err(Error::Calibration(format!(
            "estimated density slope at a = {a} is {} (not decreasing); \
             the threshold lies outside the convex region, pick a larger one",
            -nu_hat
        )));
    }

    let mut warnings = Vec::new();
    if s.n() < 20 {
        warnings.push(format!(
            "sample has only {} observations; calibrated intervals are unreliable",
            s.n()
        ));
    }

    let n = s.n();
    let mut betas = Vec::with_capacity(b_reps);
    let mut etas = Vec::with_capacity(b_reps);
    let mut nus = Vec::with_capacity(b_reps);
    for b in 0..b_reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64 + 1);
        let draw: Vec<f64> = (0..n).map(|_| s.values()[rng.gen_range(0..n)]).collect();
        let resample = Sample::new(draw)?;
        let (bb, eb, nb) = estimate_triple(&resample, a, cfg)?;
        betas.push(bb);
        etas.push(eb);
        nus.push(nb);
    }
    for v in [&mut betas, &mut etas, &mut nus] {
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    }

    // Two-sided at level 1 - alpha/3 for beta and eta, one-sided upper for nu.
    let lo_p = alpha / 6.0;
    let hi_p = 1.0 - alpha / 6.0;
    let mut beta_lo = quantile_sorted(&betas, lo_p);
    let mut beta_hi = quantile_sorted(&betas, hi_p);
    let mut eta_lo = quantile_sorted(&etas, lo_p);
    let mut eta_hi = quantile_sorted(&etas, hi_p);
    let mut nu_hi = quantile_sorted(&nus, 1.0 - alpha / 3.0);

    let floor = cfg.endpoint_floor;
    let mut clamp_up = |name: &str, v: &mut f64| {
        if *v < floor {
            warnings.push(format!("{name} endpoint {v} clamped to {floor}"));
            *v = floor;
        }
    };
    clamp_up("beta_lo", &mut beta_lo);
    clamp_up("beta_hi", &mut beta_hi);
    clamp_up("eta_lo", &mut eta_lo);
    clamp_up("eta_hi", &mut eta_hi);
    clamp_up("nu_hi", &mut nu_hi);
    let cap = 1.0 - 1e-12;
    if beta_hi > cap {
        warnings.push(format!("beta_hi endpoint {beta_hi} clamped below 1"));
        beta_hi = cap;
        beta_lo = beta_lo.min(beta_hi);
    }

    let params = IntervalParams::new(a, beta_lo, beta_hi, eta_lo, eta_hi, nu_hi, alpha)?;
    Ok(CalibratedParams { params, beta_hat, eta_hat, nu_hat, warnings })
}

/// A suggested convexity threshold and how much data lies beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSuggestion {
    pub threshold: f64,
    /// Sample points strictly above the suggestion. A small count means the
    /// tail estimates at this threshold rest on little data.
    pub points_above: usize,
}

const THRESHOLD_GRID: usize = 512;

/// Suggests the smallest point past the density mode where the estimated
/// derivative stops decreasing and starts increasing, i.e. the estimated
/// inflection where the density turns convex.
///
/// Scans a 512-point grid over the sample range. Needs at least 50
/// observations; errors when the derivative is still decreasing at the
/// sample maximum, in which case the threshold has to be picked manually.
pub fn suggest_threshold(s: &Sample, cfg: &KdeConfig) -> Result<ThresholdSuggestion> {
    if s.n() < 50 {
        return Err(Error::InvalidInput(format!(
            "threshold suggestion needs at least 50 observations, got {}",
            s.n()
        )));
    }
    let lo = s.min();
    let hi = s.max();
    let step = (hi - lo) / (THRESHOLD_GRID - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Calibration("sample has no spread".into()));
    }
    let grid: Vec<f64> = (0..THRESHOLD_GRID).map(|i| lo + step * i as f64).collect();
    let dens: Vec<f64> =
        grid.iter().map(|&x| kde_density(s, x, cfg)).collect::<Result<_>>()?;
    let mode_idx = dens
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite density"))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    if mode_idx + 1 >= THRESHOLD_GRID {
        return Err(Error::Calibration(
            "density mode sits at the sample maximum; no convex region visible, \
             choose the threshold manually"
                .into(),
        ));
    }
    let mut best_idx = mode_idx + 1;
    let mut best = kde_derivative(s, grid[best_idx], cfg)?;
    for (i, &x) in grid.iter().enumerate().skip(mode_idx + 2) {
        let d = kde_derivative(s, x, cfg)?;
        if d < best {
            best = d;
            best_idx = i;
        }
    }
    if best_idx + 1 >= THRESHOLD_GRID {
        return Err(Error::Calibration(
            "density derivative is still decreasing at the sample maximum; \
             no inflection visible, choose the threshold manually"
                .into(),
        ));
    }
    let threshold = grid[best_idx];
    let points_above = s.values().iter().filter(|&&x| x > threshold).count();
    Ok(ThresholdSuggestion { threshold, points_above })
}
