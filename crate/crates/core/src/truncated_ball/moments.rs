//! Truncated moments of the squares by adaptive quadrature.
//!
//! Every integral has the form `∫₀ᵇ f(y) g₁(y) dy` with an integrable
//! `y^{-1/2}` singularity at 0 and a root-type endpoint of `H(ρ − λy)` at `b`.
//! The substitution `y = b sin²θ` turns `g₁(y) dy` into
//! `√(2b/π) cos θ e^{−y/2} dθ` and the remaining budget `ρ − λy` into
//! `ρ cos²θ`, which leaves an analytic integrand on `[0, π/2]`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::{eval_h, BallTruncation};
use crate::distributions::{chisq_cdf, DegreesOfFreedom};
use crate::error::{domain, Result};
use crate::quadrature::{integrate_vec, Integral, Tolerance};
use crate::ruben::RubenExpansion;

/// Moments of `Xₙ²` under the truncated law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    /// `E(Xₙ²)`
    pub second: Vec<f64>,
    /// `var(Xₙ²)`
    pub var_sq: Vec<f64>,
    /// `cov(Xₙ², Xₘ²)`, symmetric, diagonal equal to `var_sq`.
    pub cov_sq: Vec<Vec<f64>>,
    /// `∫ψₙ`, which should be 1 for every `n`.
    pub mass: Vec<f64>,
    /// Largest quadrature error estimate, in the units of the entries.
    pub quad_err: f64,
}

/// `∫₀ᵇ f(y, cos²θ) g₁(y) dy` under `y = b sin²θ`.
pub(crate) fn against_chi1<const N: usize, F>(b: f64, mut f: F, tol: Tolerance) -> Result<Integral<N>>
where
    F: FnMut(f64, f64) -> Result<[f64; N]>,
{
    let front = (2.0 * b / PI).sqrt();
    let mut failure = None;
    let out = integrate_vec(
        |theta| {
            let (s, c) = theta.sin_cos();
            let y = b * s * s;
            let w = front * c * (-0.5 * y).exp();
            match f(y, c * c) {
                Ok(mut v) => {
                    v.iter_mut().for_each(|x| *x *= w);
                    v
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    [0.0; N]
                }
            }
        },
        0.0,
        FRAC_PI_2,
        tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn three_df() -> DegreesOfFreedom {
    DegreesOfFreedom::new(3.0).expect("valid df")
}

/// `J(r) = ∫ y g₁(y) H̃(r − λ_m y) dy` over `0 < y < r/λ_m`.
fn inner_first_moment(tilde: Option<&RubenExpansion>, lambda_m: f64, r: f64, tol: Tolerance) -> Result<(f64, f64)> {
    if r <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let b = r / lambda_m;
    match tilde {
        // y g₁(y) = g₃(y)
        None => Ok((chisq_cdf(three_df(), b)?, 0.0)),
        Some(h) => {
            let out = against_chi1(b, |y, c2| Ok([y * h.cdf(r * c2)?.value]), tol)?;
            Ok((out.value[0], out.error))
        }
    }
}

/// `[∫ψ, E(Y), E(Y²)]` for coordinate `n` with their error estimate.
///
/// The moments are divided by the computed mass rather than multiplied by `k`,
/// so the error of `k` and errors common to all three integrals cancel.
fn marginal_moments(bt: &BallTruncation, n: usize, tol: f64) -> Result<([f64; 3], f64)> {
    let k = bt.k_norm();
    let lam = bt.lambda()[n];
    let rho = bt.rho();
    let h = bt.marginal_expansion(n);
    let out = against_chi1(
        rho / lam,
        |y, c2| {
            let hv = eval_h(h, rho * c2)?;
            Ok([hv, y * hv, y * y * hv])
        },
        Tolerance::new(tol / k, tol),
    )?;
    let [i0, i1, i2] = out.value;
    Ok(([k * i0, i1 / i0, i2 / i0], k * out.error))
}

/// `E(Yₙ Yₘ)` as an iterated integral with exact inner limits.
fn pair_moment(bt: &BallTruncation, n: usize, m: usize, tol: f64) -> Result<(f64, f64)> {
    let k = bt.k_norm();
    let rho = bt.rho();
    let (ln, lm) = (bt.lambda()[n], bt.lambda()[m]);
    let tilde = bt.pair_expansion(n, m)?;
    let inner_tol = Tolerance::new(0.01 * tol / k, 0.1 * tol);
    let mut inner_err: f64 = 0.0;
    let out = against_chi1(
        rho / ln,
        |y1, c2| {
            let (j, e) = inner_first_moment(tilde.as_ref(), lm, rho * c2, inner_tol)?;
            inner_err = inner_err.max(e);
            Ok([y1 * j])
        },
        Tolerance::new(tol / k, tol),
    )?;
    Ok((k * out.value[0], k * (out.error + inner_err)))
}

/// `E(Y_m | Y_n = y_n)`.
pub fn conditional_mean(bt: &BallTruncation, n: usize, m: usize, y_n: f64, tol: f64) -> Result<f64> {
    let tilde = bt.pair_expansion(n, m)?;
    conditional_mean_with(bt, tilde.as_ref(), n, m, y_n, tol)
}

pub(crate) fn conditional_mean_with(
    bt: &BallTruncation,
    tilde: Option<&RubenExpansion>,
    n: usize,
    m: usize,
    y_n: f64,
    tol: f64,
) -> Result<f64> {
    let r = bt.rho() - bt.lambda()[n] * y_n;
    if !(y_n > 0.0 && r > 0.0) {
        return domain(format!("conditioning value {y_n} outside (0, rho/lambda)"));
    }
    let (j, _) = inner_first_moment(tilde, bt.lambda()[m], r, Tolerance::new(0.0, tol))?;
    Ok(j / bt.h_without(n, r)?)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        domain(format!("quadrature tolerance must lie in (0, 1), got {tol}"))
    }
}

/// `E(Xₙ²)` for every `n`, with the largest error estimate.
pub fn second_moments(bt: &BallTruncation, tol: f64) -> Result<(Vec<f64>, f64)> {
    check_tol(tol)?;
    let per: Vec<([f64; 3], f64)> =
        (0..bt.nu()).into_par_iter().map(|n| marginal_moments(bt, n, tol)).collect::<Result<_>>()?;
    let second = per.iter().zip(bt.lambda()).map(|((v, _), l)| l * v[1]).collect();
    let err = per.iter().zip(bt.lambda()).map(|((_, e), l)| l * e).fold(0.0, f64::max);
    Ok((second, err))
}

/// Full moment report: second moments, variances and covariances of the squares.
pub fn moments(bt: &BallTruncation, tol: f64) -> Result<MomentReport> {
    check_tol(tol)?;
    let nu = bt.nu();
    let lam = bt.lambda();
    let per: Vec<([f64; 3], f64)> =
        (0..nu).into_par_iter().map(|n| marginal_moments(bt, n, tol)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..nu).flat_map(|n| (n + 1..nu).map(move |m| (n, m))).collect();
    let cross: Vec<(f64, f64)> =
        pairs.par_iter().map(|&(n, m)| pair_moment(bt, n, m, tol)).collect::<Result<_>>()?;

    let mean_y: Vec<f64> = per.iter().map(|(v, _)| v[1]).collect();
    let mut quad_err: f64 = 0.0;
    let mut cov_sq = vec![vec![0.0; nu]; nu];
    let mut var_sq = vec![0.0; nu];
    for n in 0..nu {
        let (v, e) = per[n];
        var_sq[n] = lam[n] * lam[n] * (v[2] - v[1] * v[1]);
        cov_sq[n][n] = var_sq[n];
        quad_err = quad_err.max(lam[n] * lam[n] * e * (1.0 + 2.0 * v[1]));
    }
    for (&(n, m), &(e_nm, err)) in pairs.iter().zip(&cross) {
        let c = lam[n] * lam[m] * (e_nm - mean_y[n] * mean_y[m]);
        cov_sq[n][m] = c;
        cov_sq[m][n] = c;
        quad_err = quad_err.max(lam[n] * lam[m] * (err + per[n].1 * mean_y[m] + per[m].1 * mean_y[n]));
    }
    Ok(MomentReport {
        second: mean_y.iter().zip(lam).map(|(y, l)| l * y).collect(),
        var_sq,
        cov_sq,
        mass: per.iter().map(|(v, _)| v[0]).collect(),
        quad_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{central_normal_mass, std_normal_pdf};

    fn mu(t: f64) -> f64 {
        1.0 - 2.0 * t * std_normal_pdf(t).unwrap() / central_normal_mass(t)
    }

    #[test]
    fn univariate_matches_closed_form() {
        for rho in [0.05, 0.5, 1.0, 3.0, 10.0, 40.0] {
            let bt = BallTruncation::new(&[1.0], rho).unwrap();
            let r = moments(&bt, 1e-12).unwrap();
            assert!((r.second[0] - mu(rho.sqrt())).abs() < 1e-12, "rho={rho}");
            assert!((r.mass[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_two_dimensional_instance() {
        let bt = BallTruncation::new(&[1.0, 1.0], 2.0).unwrap();
        let r = moments(&bt, 1e-12).unwrap();
        assert!((r.second[0] - 0.418_023_293_130_673_58).abs() < 1e-11);
        assert!((r.var_sq[1] - 0.206_361_345_488_218_04).abs() < 1e-11);
        assert!((r.cov_sq[0][1] - (-0.047_708_533_903_802_682)).abs() < 1e-11);
        assert_eq!(r.cov_sq[0][0], r.var_sq[0]);
    }

    #[test]
    fn untruncated_limit() {
        let lam = [1.0, 2.0, 0.5];
        let bt = BallTruncation::new(&lam, 2000.0).unwrap();
        let r = moments(&bt, 1e-12).unwrap();
        for n in 0..3 {
            assert!((r.second[n] - lam[n]).abs() < 1e-9);
            assert!((r.var_sq[n] - 2.0 * lam[n] * lam[n]).abs() < 1e-8);
            for m in 0..3 {
                if m != n {
                    assert!(r.cov_sq[n][m].abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn invalid_tolerance() {
        let bt = BallTruncation::new(&[1.0], 1.0).unwrap();
        assert!(moments(&bt, 0.0).is_err());
        assert!(second_moments(&bt, 2.0).is_err());
        assert!(conditional_mean(&BallTruncation::new(&[1.0, 1.0], 1.0).unwrap(), 0, 1, 1.5, 1e-10).is_err());
    }
}
