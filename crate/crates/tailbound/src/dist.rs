//! Reference distributions with exact tail parameters.
//!
//! The application studies treat the distribution as known below (and
//! sometimes above) the threshold, so everything here is analytic: pdf, cdf,
//! quantile, the pdf derivative used for `nu`, and truncated expectations by
//! quadrature. Sampling goes through the inverse cdf, which keeps synthetic
//! studies reproducible to the bit across platforms.

use rand::Rng;
use tailbound_core::quad::adaptive_simpson;
use tailbound_core::TailParams;

use crate::{Error, Result};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506628274631000502415765284811;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Standard normal cdf via the complementary error function.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Inverse standard normal cdf: Acklam's rational approximation polished by
/// one Halley step, good to a few ulps over (0, 1).
pub fn norm_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "norm_quantile needs p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement against the exact cdf.
    let e = norm_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// A distribution family with closed-form tail geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnownDistribution {
    /// `Exp(rate)` on `[0, inf)`.
    Exponential { rate: f64 },
    /// `exp(mu + sigma*Z)` for standard normal `Z`.
    LogNormal { mu: f64, sigma: f64 },
    /// Survival `x^{-index}` on `(1, inf)`.
    Pareto { index: f64 },
}

impl KnownDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidInput(format!("exponential rate must be > 0, got {rate}")));
        }
        Ok(KnownDistribution::Exponential { rate })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lognormal needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(KnownDistribution::LogNormal { mu, sigma })
    }

    /// Lognormal matched to a target mean and standard deviation.
    pub fn lognormal_from_moments(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0 && sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidInput(format!(
                "moment-matched lognormal needs mean > 0 and sd > 0, got {mean}, {sd}"
            )));
        }
        let s2 = (1.0 + (sd / mean).powi(2)).ln();
        Ok(KnownDistribution::LogNormal { mu: mean.ln() - 0.5 * s2, sigma: s2.sqrt() })
    }

    pub fn pareto(index: f64) -> Result<Self> {
        if !(index.is_finite() && index > 0.0) {
            return Err(Error::InvalidInput(format!("pareto index must be > 0, got {index}")));
        }
        Ok(KnownDistribution::Pareto { index })
    }

    /// Left edge of the support.
    pub fn support_lo(&self) -> f64 {
        match self {
            KnownDistribution::Exponential { .. } | KnownDistribution::LogNormal { .. } => 0.0,
            KnownDistribution::Pareto { .. } => 1.0,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            KnownDistribution::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            KnownDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    norm_pdf(z) / (sigma * x)
                }
            }
            KnownDistribution::Pareto { index } => {
                if x <= 1.0 {
                    0.0
                } else {
                    index * x.powf(-index - 1.0)
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            KnownDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            KnownDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma)
                }
            }
            KnownDistribution::Pareto { index } => {
                if x <= 1.0 {
                    0.0
                } else {
                    1.0 - x.powf(-index)
                }
            }
        }
    }

    /// `P(X > x)`, computed without the `1 - cdf` cancellation.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            KnownDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            KnownDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * libm::erfc((x.ln() - mu) / (sigma * SQRT_2))
                }
            }
            KnownDistribution::Pareto { index } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-index)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
        match *self {
            KnownDistribution::Exponential { rate } => -(-p).ln_1p() / rate,
            KnownDistribution::LogNormal { mu, sigma } => (mu + sigma * norm_quantile(p)).exp(),
            KnownDistribution::Pareto { index } => (1.0 - p).powf(-1.0 / index),
        }
    }

    /// Derivative of the pdf; `-pdf_derivative(a)` is the slope bound `nu`.
    pub fn pdf_derivative(&self, x: f64) -> f64 {
        match *self {
            KnownDistribution::Exponential { rate } => -rate * self.pdf(x),
            KnownDistribution::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    -self.pdf(x) * (1.0 + z / sigma) / x
                }
            }
            KnownDistribution::Pareto { index } => {
                if x <= 1.0 {
                    0.0
                } else {
                    -index * (index + 1.0) * x.powf(-index - 2.0)
                }
            }
        }
    }

    /// Exact `(beta, eta, nu)` at threshold `a`, packaged for the solvers.
    ///
    /// Fails when the density is not decreasing at `a` (the slope bound
    /// would be nonpositive) or when `a` leaves no tail mass.
    pub fn tail_params(&self, a: f64) -> Result<TailParams> {
        let beta = self.survival(a);
        let eta = self.pdf(a);
        let nu = -self.pdf_derivative(a);
        if nu <= 0.0 {
            return Err(Error::Calibration(format!(
                "density is not decreasing at a = {a} (slope {})",
                -nu
            )));
        }
        TailParams::new(a, beta, eta, nu).map_err(Error::from)
    }

    /// `E[g(X); X <= a]` by adaptive quadrature, split at `cuts`.
    pub fn expectation_below<G: Fn(f64) -> f64>(&self, g: G, a: f64, cuts: &[f64]) -> f64 {
        let lo = self.support_lo();
        if a <= lo {
            return 0.0;
        }
        let mut points: Vec<f64> = vec![lo];
        for &c in cuts {
            if c > lo && c < a {
                points.push(c);
            }
        }
        points.push(a);
        points.sort_by(|x, y| x.partial_cmp(y).expect("finite cut"));
        let mut total = 0.0;
        for w in points.windows(2) {
            let f = |x: f64| g(x) * self.pdf(x);
            total += adaptive_simpson(&f, w[0], w[1], 1e-11);
        }
        total
    }

    /// One inverse-cdf draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
        self.quantile(u)
    }

    /// `n` inverse-cdf draws.
    pub fn sample_n<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}
