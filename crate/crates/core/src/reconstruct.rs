//! Fixed-point recovery of the diagonal covariance `Λ` from the second moments
//! of the truncated law.
//!
//! The map is `λₙ ← λₙ·(targetₙ / forwardₙ(λ))^θ`, started from `λ = target`.
//! Its fixed points are exactly the solutions of `forward(λ) = target`. The
//! exponent `θ` starts at the requested damping and is halved, down to `1/8`,
//! whenever a step would increase the residual.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::truncated_ball::{second_moments, BallTruncation};

/// Smallest damping exponent reached by automatic halving.
pub const MIN_DAMPING: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    /// Stop once `max |forwardₙ − targetₙ| / targetₙ` is at most this.
    pub tol: f64,
    /// Budget of forward evaluations, the initial one included.
    pub max_iter: usize,
    /// Initial damping exponent `θ` in `(0, 1]`.
    pub damping: f64,
    /// Starting point; `None` means the target itself.
    pub init: Option<Vec<f64>>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, damping: 1.0, init: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionResult {
    pub lambda_hat: Vec<f64>,
    /// Forward evaluations performed, the initial one included.
    pub iterations: usize,
    /// Residual of every accepted iterate, starting with the initial point.
    pub residual_trace: Vec<f64>,
    pub converged: bool,
    /// Damping exponent in force when the iteration stopped.
    pub damping: f64,
}

/// Quadrature tolerance used for the forward model under solver tolerance `tol`.
pub fn forward_tolerance(tol: f64) -> f64 {
    (0.01 * tol).clamp(1e-13, 1e-3)
}

/// Truncated second moments `E(Xₙ²)` for variances `lambda`.
pub fn forward(lambda: &[f64], rho: f64, tol: f64) -> Result<Vec<f64>> {
    let bt = BallTruncation::new(lambda, rho)?;
    Ok(second_moments(&bt, tol)?.0)
}

fn residual(values: &[f64], target: &[f64]) -> f64 {
    values.iter().zip(target).map(|(f, t)| (f - t).abs() / t).fold(0.0, f64::max)
}

fn validate(target: &[f64], rho: f64, opts: &ReconstructOptions) -> Result<()> {
    if target.is_empty() {
        return domain("target must have at least one entry");
    }
    if !(rho.is_finite() && rho > 0.0) {
        return domain(format!("rho must be positive and finite, got {rho}"));
    }
    if let Some(bad) = target.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return domain(format!("target moments must be positive and finite, got {bad}"));
    }
    if let Some(bad) = target.iter().find(|t| **t >= rho) {
        return domain(format!("target moment {bad} is not below rho = {rho}; no truncated law attains it"));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return domain(format!("tolerance must lie in (0, 1), got {}", opts.tol));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return domain(format!("damping must lie in (0, 1], got {}", opts.damping));
    }
    if opts.max_iter == 0 {
        return domain("max_iter must be at least 1");
    }
    if let Some(init) = &opts.init {
        if init.len() != target.len() || init.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return domain("init must hold one positive finite variance per target entry");
        }
    }
    Ok(())
}

/// Recover `λ` with `forward(λ, ρ) = target`.
///
/// Running out of budget, or a forward evaluation failing after the first one,
/// is reported through `converged = false`, not as an error.
pub fn reconstruct(target: &[f64], rho: f64, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    validate(target, rho, opts)?;
    let qtol = forward_tolerance(opts.tol);
    let mut lambda = opts.init.clone().unwrap_or_else(|| target.to_vec());
    let mut values = forward(&lambda, rho, qtol)?;
    let mut r = residual(&values, target);
    let mut trace = vec![r];
    let mut evaluations = 1;
    let mut theta = opts.damping;
    let mut converged = r <= opts.tol;
    while !converged && evaluations < opts.max_iter {
        let next: Vec<f64> =
            lambda.iter().zip(target).zip(&values).map(|((l, t), f)| l * (t / f).powf(theta)).collect();
        if next.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            break;
        }
        evaluations += 1;
        // A target no truncated law attains drives λ toward degenerate spreads.
        let Ok(next_values) = forward(&next, rho, qtol) else {
            break;
        };
        let next_r = residual(&next_values, target);
        if next_r > r && theta > MIN_DAMPING {
            theta = (0.5 * theta).max(MIN_DAMPING);
            continue;
        }
        lambda = next;
        values = next_values;
        r = next_r;
        trace.push(r);
        converged = r <= opts.tol;
    }
    Ok(ReconstructionResult { lambda_hat: lambda, iterations: evaluations, residual_trace: trace, converged, damping: theta })
}
