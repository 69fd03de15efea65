//! Standard normal and central chi-square distributions.
//!
//! The chi-square cdf is the regularized lower incomplete gamma function
//! `P(df/2, u/2)`, evaluated by its power series below the transition point
//! `x = a + 1` and by a Lentz continued fraction for the complement above it.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Error, Result};

/// 1/√(2π)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

const GAMMA_EPS: f64 = 1e-16;

/// Degrees of freedom of a central chi-square law. Real-valued, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DegreesOfFreedom(f64);

impl DegreesOfFreedom {
    pub fn new(df: f64) -> Result<Self> {
        if df.is_finite() && df > 0.0 {
            Ok(Self(df))
        } else {
            domain(format!("degrees of freedom must be positive and finite, got {df}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DegreesOfFreedom {
    type Error = Error;

    fn try_from(df: f64) -> Result<Self> {
        Self::new(df)
    }
}

impl From<DegreesOfFreedom> for f64 {
    fn from(df: DegreesOfFreedom) -> f64 {
        df.0
    }
}

/// Standard normal density φ(x).
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(FRAC_1_SQRT_2PI * (-0.5 * x * x).exp())
}

/// Standard normal cdf Φ(x), accurate in both tails.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
}

/// `2Φ(t) − 1 = erf(t/√2)` without the cancellation of the naive form.
pub(crate) fn central_normal_mass(t: f64) -> f64 {
    libm::erf(t * FRAC_1_SQRT_2)
}

/// Chi-square density `g_df(y)`; zero for `y ≤ 0`.
pub fn chisq_pdf(df: DegreesOfFreedom, y: f64) -> Result<f64> {
    ensure_finite("y", y)?;
    if y <= 0.0 {
        return Ok(0.0);
    }
    let half = 0.5 * df.get();
    let log_density = (half - 1.0) * (0.5 * y).ln() - 0.5 * y - ln_gamma(half);
    Ok(0.5 * log_density.exp())
}

/// Chi-square cdf `G_df(u)`; zero for `u ≤ 0`.
pub fn chisq_cdf(df: DegreesOfFreedom, u: f64) -> Result<f64> {
    ensure_finite("u", u)?;
    if u <= 0.0 {
        return Ok(0.0);
    }
    regularized_gamma_p(0.5 * df.get(), 0.5 * u)
}

/// Upper tail `1 − G_df(u)` computed without cancellation.
pub fn chisq_sf(df: DegreesOfFreedom, u: f64) -> Result<f64> {
    ensure_finite("u", u)?;
    if u <= 0.0 {
        return Ok(1.0);
    }
    regularized_gamma_q(0.5 * df.get(), 0.5 * u)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    gamma_pq(a, x).map(|(p, _)| p)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    gamma_pq(a, x).map(|(_, q)| q)
}

fn gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if a.is_nan() || x.is_nan() {
        return domain("incomplete gamma arguments must not be NaN");
    }
    if !(a > 0.0) || x < 0.0 {
        return domain(format!("incomplete gamma requires a > 0 and x >= 0, got a={a}, x={x}"));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let p = gamma_series(a, x, log_prefactor)?;
        Ok((p, 1.0 - p))
    } else {
        let q = gamma_continued_fraction(a, x, log_prefactor)?;
        Ok((1.0 - q, q))
    }
}

fn max_iterations(a: f64) -> usize {
    // both expansions need O(√a) terms near the transition point
    1000 + 50 * a.sqrt() as usize
}

/// `P(a, x) = x^a e^{-x} / Γ(a+1) · Σ_n x^n / ((a+1)…(a+n))`
fn gamma_series(a: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..max_iterations(a) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term < sum * GAMMA_EPS {
            return Ok((log_prefactor + sum.ln()).exp().min(1.0));
        }
    }
    Err(Error::Convergence {
        what: "incomplete gamma series".into(),
        achieved: term / sum,
    })
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_continued_fraction(a: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for n in 1..=max_iterations(a) {
        let an = -(n as f64) * (n as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            return Ok((log_prefactor + h.ln()).exp().min(1.0));
        }
    }
    Err(Error::Convergence {
        what: "incomplete gamma continued fraction".into(),
        achieved: h,
    })
}

/// `x^a e^{-x} / Γ(a+1)` for real `a` (zero where `1/Γ(a+1)` vanishes) and `x > 0`.
///
/// With `x = u/2` this is twice the chi-square density of `2a + 2` degrees of
/// freedom at `u`, and the analytic continuation below `a = 0`.
pub(crate) fn poisson_kernel(a: f64, x: f64) -> f64 {
    let arg = a + 1.0;
    if arg <= 0.0 && arg == arg.round() {
        return 0.0;
    }
    let (lg, sign) = libm::lgamma_r(arg);
    let v = (a * x.ln() - x - lg).exp();
    if sign < 0 {
        -v
    } else {
        v
    }
}
