//! `X ~ N_ν(0, diag λ)` truncated to the open ball `B(ρ) = {x : xᵀx < ρ}`.
//!
//! Note that `ρ` is the **squared** radius.
//!
//! With `Yₙ = Xₙ²/λₙ`, the untruncated `Yₙ` are independent `χ²₁`, so every
//! density here is a product of `g₁` factors times a cdf `H` of a positive
//! combination of the remaining `Y`'s, evaluated by [`crate::ruben`].

mod moments;
mod sampler;

pub(crate) use moments::conditional_mean_with;
pub use moments::{conditional_mean, moments, second_moments, MomentReport};
pub use sampler::{sample, sample_moments, EmpiricalMoments, SampleOutput, SamplerConfig};

use serde::Serialize;

use crate::distributions::{chisq_pdf, std_normal_pdf, DegreesOfFreedom};
use crate::error::{domain, ensure_finite, Result};
use crate::ruben::{CoefficientVector, RubenExpansion, DEFAULT_K_MAX};

/// Truncation tolerance used for every mixture cdf inside this module.
pub const DEFAULT_RUBEN_TOL: f64 = 1e-13;

/// The truncated law together with the mixture expansions it needs.
#[derive(Debug, Clone, Serialize)]
pub struct BallTruncation {
    nu: usize,
    lambda: Vec<f64>,
    rho: f64,
    k_norm: f64,
    #[serde(skip)]
    ruben_tol: f64,
    /// `H` over all coordinates except `n`; `None` when `ν = 1`.
    #[serde(skip)]
    marginal: Vec<Option<RubenExpansion>>,
}

pub(crate) fn one_df() -> DegreesOfFreedom {
    DegreesOfFreedom::new(1.0).expect("1 is a valid df")
}

/// Evaluate an optional expansion, with the empty product convention `H ≡ 1` on `u > 0`.
pub(crate) fn eval_h(h: Option<&RubenExpansion>, u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    match h {
        Some(e) => Ok(e.cdf(u)?.value),
        None => Ok(1.0),
    }
}

pub(crate) fn expansion_over(coeffs: Vec<f64>, tol: f64) -> Result<Option<RubenExpansion>> {
    if coeffs.is_empty() {
        return Ok(None);
    }
    let cv = CoefficientVector::normalize(&coeffs)?;
    RubenExpansion::with_tolerance(&cv, tol, DEFAULT_K_MAX).map(Some)
}

impl BallTruncation {
    pub fn new(lambda: &[f64], rho: f64) -> Result<Self> {
        Self::with_ruben_tol(lambda, rho, DEFAULT_RUBEN_TOL)
    }

    pub fn with_ruben_tol(lambda: &[f64], rho: f64, ruben_tol: f64) -> Result<Self> {
        if lambda.is_empty() {
            return domain("lambda must have at least one entry");
        }
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return domain(format!("variances must be positive and finite, got {bad}"));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return domain(format!("rho must be positive and finite, got {rho}"));
        }
        let full = expansion_over(lambda.to_vec(), ruben_tol)?.expect("nonempty");
        let mass = full.cdf(rho)?.value;
        if !(mass > 0.0) {
            return domain(format!("ball of squared radius {rho} carries no probability mass"));
        }
        let nu = lambda.len();
        let marginal = (0..nu)
            .map(|n| expansion_over(others(lambda, &[n]), ruben_tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { nu, lambda: lambda.to_vec(), rho, k_norm: 1.0 / mass, ruben_tol, marginal })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Normalizing constant `k = 1 / P(Σ λₙ Yₙ < ρ)`.
    pub fn k_norm(&self) -> f64 {
        self.k_norm
    }

    pub fn ruben_tol(&self) -> f64 {
        self.ruben_tol
    }

    /// The same truncation with `λₙ` replaced.
    pub fn with_lambda(&self, n: usize, value: f64) -> Result<Self> {
        self.check_index(n)?;
        let mut lambda = self.lambda.clone();
        lambda[n] = value;
        Self::with_ruben_tol(&lambda, self.rho, self.ruben_tol)
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n < self.nu {
            Ok(())
        } else {
            domain(format!("coordinate index {n} out of range for nu = {}", self.nu))
        }
    }

    /// Truncated density of `X` at `x`.
    pub fn joint_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nu {
            return domain(format!("expected a point of dimension {}, got {}", self.nu, x.len()));
        }
        for v in x {
            ensure_finite("x", *v)?;
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 >= self.rho {
            return Ok(0.0);
        }
        let mut density = self.k_norm;
        for (xi, li) in x.iter().zip(&self.lambda) {
            let sd = li.sqrt();
            density *= std_normal_pdf(xi / sd)? / sd;
        }
        Ok(density)
    }

    /// `k`; kept as an operation for symmetry with the other densities.
    pub fn normalizer(&self) -> f64 {
        self.k_norm
    }

    /// `H` over all coordinates except `n`, at `u`.
    pub fn h_without(&self, n: usize, u: f64) -> Result<f64> {
        self.check_index(n)?;
        eval_h(self.marginal[n].as_ref(), u)
    }

    pub(crate) fn marginal_expansion(&self, n: usize) -> Option<&RubenExpansion> {
        self.marginal[n].as_ref()
    }

    /// Expansion for `H̃`, the cdf over all coordinates except `n` and `m`.
    pub fn pair_expansion(&self, n: usize, m: usize) -> Result<Option<RubenExpansion>> {
        self.check_index(n)?;
        self.check_index(m)?;
        if n == m {
            return domain("pair indices must differ");
        }
        expansion_over(others(&self.lambda, &[n, m]), self.ruben_tol)
    }

    /// Marginal density `ψ(y) = k g₁(y) H(ρ − λₙ y)` of `Yₙ`.
    pub fn marginal_density_y(&self, n: usize, y: f64) -> Result<f64> {
        self.check_index(n)?;
        ensure_finite("y", y)?;
        let rest = self.rho - self.lambda[n] * y;
        if y <= 0.0 || rest <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.k_norm * chisq_pdf(one_df(), y)? * self.h_without(n, rest)?)
    }

    /// Conditional density of `Y_m` given `Y_n = y_n`.
    pub fn conditional_density(&self, n: usize, m: usize, y_n: f64, y_m: f64) -> Result<f64> {
        let tilde = self.pair_expansion(n, m)?;
        self.conditional_density_with(tilde.as_ref(), n, m, y_n, y_m)
    }

    pub(crate) fn conditional_density_with(
        &self,
        tilde: Option<&RubenExpansion>,
        n: usize,
        m: usize,
        y_n: f64,
        y_m: f64,
    ) -> Result<f64> {
        ensure_finite("y", y_n)?;
        ensure_finite("y", y_m)?;
        let r = self.rho - self.lambda[n] * y_n;
        if !(y_n > 0.0 && r > 0.0) {
            return domain(format!("conditioning value {y_n} outside (0, rho/lambda)"));
        }
        let rest = r - self.lambda[m] * y_m;
        if y_m <= 0.0 || rest <= 0.0 {
            return Ok(0.0);
        }
        let denom = self.h_without(n, r)?;
        Ok(chisq_pdf(one_df(), y_m)? * eval_h(tilde, rest)? / denom)
    }

    /// Conditional density of `Y₂` given `Y₁ = y1` (first two coordinates).
    pub fn conditional_density_y2(&self, y1: f64, y2: f64) -> Result<f64> {
        if self.nu < 2 {
            return domain("conditional density needs nu >= 2");
        }
        self.conditional_density(0, 1, y1, y2)
    }
}

pub(crate) fn others(lambda: &[f64], skip: &[usize]) -> Vec<f64> {
    lambda
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, l)| *l)
        .collect()
}
