//! Numerical certification of the variance, covariance, log-concavity and
//! likelihood-ratio claims on explicit grids.
//!
//! Every check returns a [`SlackReport`]. A slack is a signed margin: a
//! nonnegative slack means the claim holds at that point. Reports only ever
//! speak about their own grid.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{central_normal_mass, std_normal_pdf};
use crate::error::{domain, Error, Result};
use crate::ruben::{expansion_log_second_difference, CoefficientVector, RubenExpansion, DEFAULT_K_MAX};
use crate::truncated_ball::{moments, second_moments, BallTruncation, MomentReport};

/// Default tolerance for slacks that rest on quadrature.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Default tolerance for slacks computed from closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-12;
/// Default relative tolerance for the weight-sequence inequalities.
pub const WEIGHT_TOL: f64 = 1e-15;
/// Default tolerance for log-cdf second differences.
pub const LOGCONCAVITY_TOL: f64 = 1e-9;
/// Default relative finite-difference step for the derivative form.
pub const DEFAULT_H_REL: f64 = 1e-4;
/// Mixture truncation used by the cdf-level checks.
const CDF_TRUNCATION: f64 = 1e-13;

/// One evaluation point of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackPoint {
    pub index: usize,
    pub family: String,
    /// Coordinates, in the order of [`SlackReport::axes`].
    pub coords: Vec<f64>,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackReport {
    pub claim: String,
    pub statement: String,
    pub grid: String,
    pub axes: Vec<String>,
    pub tol: f64,
    /// `None` when the grid holds no points.
    pub worst_slack: Option<f64>,
    pub passed: bool,
    pub note: String,
    pub witnesses: Vec<SlackPoint>,
    pub observations: BTreeMap<String, f64>,
    pub points: Vec<SlackPoint>,
}

impl SlackReport {
    fn build(
        claim: &str,
        statement: &str,
        grid: String,
        axes: &[&str],
        tol: f64,
        points: Vec<(String, Vec<f64>, f64)>,
        observations: BTreeMap<String, f64>,
    ) -> Self {
        let points: Vec<SlackPoint> = points
            .into_iter()
            .enumerate()
            .map(|(index, (family, coords, slack))| SlackPoint { index, family, coords, slack })
            .collect();
        let key = |p: &SlackPoint| if p.slack.is_nan() { f64::NEG_INFINITY } else { p.slack };
        let mut order: Vec<&SlackPoint> = points.iter().collect();
        order.sort_by(|a, b| key(a).total_cmp(&key(b)));
        let witnesses: Vec<SlackPoint> = order.iter().take(5).map(|p| (*p).clone()).collect();
        let worst_slack = witnesses.first().map(|p| p.slack);
        let passed = witnesses.first().is_none_or(|p| key(p) >= -tol);
        let note = if passed { "no counterexample found on grid" } else { "counterexample found on grid" };
        Self {
            claim: claim.to_string(),
            statement: statement.to_string(),
            grid,
            axes: axes.iter().map(|s| s.to_string()).collect(),
            tol,
            worst_slack,
            passed,
            note: note.to_string(),
            witnesses,
            observations,
            points,
        }
    }

    /// Slacks of one family, in grid order.
    pub fn slacks(&self, family: &str) -> Vec<f64> {
        self.points.iter().filter(|p| p.family == family).map(|p| p.slack).collect()
    }

    /// One CSV row per grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["claim".to_string(), "index".into(), "family".into()];
        header.extend(self.axes.iter().cloned());
        header.push("slack".into());
        w.write_record(&header).map_err(io_error)?;
        for p in &self.points {
            let mut row = vec![self.claim.clone(), p.index.to_string(), p.family.clone()];
            row.extend(p.coords.iter().map(|c| format_float(*c)));
            row.push(format_float(p.slack));
            w.write_record(&row).map_err(io_error)?;
        }
        w.flush().map_err(|e| Error::Domain(format!("write failed: {e}")))
    }
}

fn io_error(e: csv::Error) -> Error {
    Error::Domain(format!("write failed: {e}"))
}

/// Shortest round-trip representation, shared by every CSV writer.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Claim identifiers accepted by [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    Mu,
    Variance,
    Derivative,
    Covariance,
    MlrMarginal,
    MlrConditional,
    CondMean,
    Logconcavity,
    Weights,
    Remark1,
    All,
}

impl Claim {
    pub const EACH: [Claim; 10] = [
        Claim::Mu,
        Claim::Variance,
        Claim::Derivative,
        Claim::Covariance,
        Claim::MlrMarginal,
        Claim::MlrConditional,
        Claim::CondMean,
        Claim::Logconcavity,
        Claim::Weights,
        Claim::Remark1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Claim::Mu => "mu",
            Claim::Variance => "variance",
            Claim::Derivative => "derivative",
            Claim::Covariance => "covariance",
            Claim::MlrMarginal => "mlr-marginal",
            Claim::MlrConditional => "mlr-conditional",
            Claim::CondMean => "cond-mean",
            Claim::Logconcavity => "logconcavity",
            Claim::Weights => "weights",
            Claim::Remark1 => "remark1",
            Claim::All => "all",
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Claim::Mu => CLOSED_FORM_TOL,
            Claim::Weights => WEIGHT_TOL,
            Claim::Logconcavity => LOGCONCAVITY_TOL,
            Claim::Remark1 => CLOSED_FORM_TOL,
            _ => QUADRATURE_TOL,
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Claim::EACH
            .into_iter()
            .chain([Claim::All])
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown claim '{s}'")))
    }
}

/// `n` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` points evenly spaced over `[lo, hi]`, endpoints included.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Parse `log:lo:hi:n`, `lin:lo:hi:n` or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [kind @ ("log" | "lin"), lo, hi, n] => {
            let lo: f64 = lo.parse().map_err(|_| Error::Domain(format!("bad grid bound '{lo}'")))?;
            let hi: f64 = hi.parse().map_err(|_| Error::Domain(format!("bad grid bound '{hi}'")))?;
            let n: usize = n.parse().map_err(|_| Error::Domain(format!("bad grid size '{n}'")))?;
            if n == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo || (*kind == "log" && lo <= 0.0) {
                return domain(format!("invalid grid '{spec}'"));
            }
            if *kind == "log" {
                log_space(lo, hi, n)
            } else {
                lin_space(lo, hi, n)
            }
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Domain(format!("bad grid value '{v}'"))))
            .collect::<Result<Vec<_>>>()?,
        _ => return domain(format!("invalid grid '{spec}'")),
    };
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
        return domain(format!("invalid grid '{spec}'"));
    }
    Ok(grid)
}

fn check_increasing(name: &str, grid: &[f64], lo: f64, hi: f64) -> Result<()> {
    if grid.iter().any(|v| !(*v > lo && *v < hi)) {
        return domain(format!("{name} grid must lie inside ({lo}, {hi})"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain(format!("{name} grid must be strictly increasing"));
    }
    Ok(())
}

fn describe(values: &[f64]) -> String {
    match values {
        [] => "[]".into(),
        [v] => format!("[{v}]"),
        _ => format!("{} points in [{}, {}]", values.len(), values[0], values[values.len() - 1]),
    }
}

fn obs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

// ---------------------------------------------------------------------------
// Univariate closed form

/// `∫₀ᵗ x² φ(x) dx` by its alternating series; accurate where the closed form cancels.
fn second_moment_mass_series(t: f64) -> f64 {
    let t2 = t * t;
    let mut power = t2 * t;
    let mut factorial = 1.0;
    let mut sum = 0.0;
    for k in 0..200 {
        let term = power / (factorial * (2 * k + 3) as f64);
        sum += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 * sum.abs() {
            break;
        }
        power *= t2 / 2.0;
        factorial *= (k + 1) as f64;
    }
    sum * crate::distributions::FRAC_1_SQRT_2PI
}

/// `μ(t) = 1 − 2tφ(t)/{2Φ(t) − 1}`, the mean of `χ²₁` truncated to `(0, t²)`.
pub fn mu(t: f64) -> Result<f64> {
    if !(t > 0.0) || t.is_nan() {
        return domain(format!("mu needs t > 0, got {t}"));
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    let mass = central_normal_mass(t);
    if t < 1.0 {
        return Ok(2.0 * second_moment_mass_series(t) / mass);
    }
    Ok(1.0 - 2.0 * t * std_normal_pdf(t)? / mass)
}

/// `μ₁(t) = (t² − 1){2Φ(t) − 1} + 2tφ(t)`.
pub fn mu1(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("mu1 needs finite t > 0, got {t}"));
    }
    Ok((t * t - 1.0) * central_normal_mass(t) + 2.0 * t * std_normal_pdf(t)?)
}

/// Increments of `μ` over the grid and pointwise values of `μ₁`.
pub fn check_mu_monotone(t_grid: &[f64], tol: f64) -> Result<SlackReport> {
    check_increasing("t", t_grid, 0.0, f64::INFINITY)?;
    let values: Vec<f64> = t_grid.iter().map(|t| mu(*t)).collect::<Result<_>>()?;
    let mut points: Vec<(String, Vec<f64>, f64)> = t_grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, m)| ("increment".to_string(), vec![t[0], t[1]], m[1] - m[0]))
        .collect();
    for t in t_grid {
        points.push(("mu1".into(), vec![*t, *t], mu1(*t)?));
    }
    Ok(SlackReport::build(
        "mu",
        "mu(t) = 1 - 2 t phi(t) / (2 Phi(t) - 1) is nondecreasing in t > 0, and mu1(t) >= 0",
        format!("t: {}", describe(t_grid)),
        &["t_lo", "t_hi"],
        tol,
        points,
        BTreeMap::new(),
    ))
}

// ---------------------------------------------------------------------------
// Moment inequalities

fn quad_tol_for(tol: f64) -> f64 {
    (0.01 * tol).clamp(1e-13, 1e-10)
}

/// Scaled slack `2E(Yₙ) − var(Yₙ)`, i.e. `{2λₙE(Xₙ²) − var(Xₙ²)}/λₙ²`.
pub fn variance_slacks(bt: &BallTruncation, report: &MomentReport) -> Vec<f64> {
    bt.lambda()
        .iter()
        .enumerate()
        .map(|(n, l)| (2.0 * l * report.second[n] - report.var_sq[n]) / (l * l))
        .collect()
}

/// Scaled slack `−cov(Yₙ, Yₘ)` for `n < m`, row-major.
pub fn covariance_slacks(bt: &BallTruncation, report: &MomentReport) -> Vec<(usize, usize, f64)> {
    let lam = bt.lambda();
    let mut out = Vec::new();
    for n in 0..bt.nu() {
        for m in n + 1..bt.nu() {
            out.push((n, m, -report.cov_sq[n][m] / (lam[n] * lam[m])));
        }
    }
    out
}

fn variance_points(bt: &BallTruncation, report: &MomentReport) -> Vec<(String, Vec<f64>, f64)> {
    variance_slacks(bt, report)
        .into_iter()
        .enumerate()
        .map(|(n, s)| ("variance".to_string(), vec![n as f64, bt.lambda()[n], bt.rho()], s))
        .collect()
}

fn covariance_points(bt: &BallTruncation, report: &MomentReport) -> Vec<(String, Vec<f64>, f64)> {
    covariance_slacks(bt, report)
        .into_iter()
        .map(|(n, m, s)| ("covariance".to_string(), vec![n as f64, m as f64, bt.rho()], s))
        .collect()
}

const VARIANCE_STATEMENT: &str = "var(X_n^2) <= 2 lambda_n E(X_n^2); slack reported as 2E(Y_n) - var(Y_n)";
const COVARIANCE_STATEMENT: &str = "cov(X_n^2, X_m^2) <= 0; slack reported as -cov(Y_n, Y_m)";
const DERIVATIVE_STATEMENT: &str =
    "dE(Y_n)/dlambda_n <= 0 for Y_n = X_n^2/lambda_n; slack reported as -lambda_n dE(Y_n)/dlambda_n by central differences";

/// Variance inequality at every coordinate of one instance.
pub fn check_variance_inequality(bt: &BallTruncation, tol: f64) -> Result<SlackReport> {
    let report = moments(bt, quad_tol_for(tol))?;
    Ok(SlackReport::build(
        Claim::Variance.as_str(),
        VARIANCE_STATEMENT,
        format!("lambda = {:?}, rho = {}", bt.lambda(), bt.rho()),
        &["n", "lambda_n", "rho"],
        tol,
        variance_points(bt, &report),
        obs(&[("quad_err", report.quad_err)]),
    ))
}

/// Covariance inequality for every pair of one instance.
pub fn check_covariance_inequality(bt: &BallTruncation, tol: f64) -> Result<SlackReport> {
    if bt.nu() < 2 {
        return domain("the covariance inequality needs nu >= 2");
    }
    let report = moments(bt, quad_tol_for(tol))?;
    Ok(SlackReport::build(
        Claim::Covariance.as_str(),
        COVARIANCE_STATEMENT,
        format!("lambda = {:?}, rho = {}", bt.lambda(), bt.rho()),
        &["n", "m", "rho"],
        tol,
        covariance_points(bt, &report),
        obs(&[("quad_err", report.quad_err)]),
    ))
}

/// `−λₙ ∂E(Yₙ)/∂λₙ` by a central difference with relative step `h_rel`.
pub fn derivative_slack(bt: &BallTruncation, n: usize, h_rel: f64) -> Result<f64> {
    if !(h_rel > 0.0 && h_rel < 1.0) {
        return domain(format!("relative step must lie in (0, 1), got {h_rel}"));
    }
    if n >= bt.nu() {
        return domain(format!("coordinate index {n} out of range for nu = {}", bt.nu()));
    }
    let lam = bt.lambda()[n];
    let mean_y = |l: f64| -> Result<f64> {
        let shifted = bt.with_lambda(n, l)?;
        Ok(second_moments(&shifted, 1e-12)?.0[n] / l)
    };
    let up = mean_y(lam * (1.0 + h_rel))?;
    let down = mean_y(lam * (1.0 - h_rel))?;
    Ok(-(up - down) / (2.0 * h_rel))
}

/// Derivative form at coordinate `n`, with the variance slack for comparison.
///
/// Exact differentiation gives `−λₙ ∂E(Yₙ)/∂λₙ = {2E(Yₙ) − var(Yₙ)}/2`, so the two
/// slacks must agree in sign and the gap is recorded as an observation.
pub fn check_derivative_form(bt: &BallTruncation, n: usize, h_rel: f64, tol: f64) -> Result<SlackReport> {
    let fd = derivative_slack(bt, n, h_rel)?;
    let var = variance_slacks(bt, &moments(bt, quad_tol_for(tol))?)[n];
    Ok(SlackReport::build(
        Claim::Derivative.as_str(),
        DERIVATIVE_STATEMENT,
        format!("lambda = {:?}, rho = {}, n = {n}, h_rel = {h_rel}", bt.lambda(), bt.rho()),
        &["n", "lambda_n", "rho"],
        tol,
        vec![("derivative".into(), vec![n as f64, bt.lambda()[n], bt.rho()], fd)],
        obs(&[
            ("variance_slack", var),
            ("equivalence_gap", (fd - 0.5 * var).abs()),
            ("sign_agreement", if (fd >= -tol) == (var >= -tol) { 1.0 } else { 0.0 }),
        ]),
    ))
}

// ---------------------------------------------------------------------------
// Likelihood ratios

/// `λ·h(ρ − λy)/H(ρ − λy)`.
fn scaled_hazard(h: &RubenExpansion, lambda: f64, u: f64) -> Result<f64> {
    let (big, small) = h.cdf_pdf(u)?;
    Ok(lambda * small / big)
}

/// Ratio `ψ(y; lam_hi)/ψ(y; lam_lo)` of marginal densities of `Yₙ` with `λₙ`
/// set to the two values, up to the positive constant `k_hi/k_lo`.
///
/// Slacks of family `ratio` are drops between adjacent grid points, including
/// the drop to the zero branch `y ≥ ρ/lam_hi`. Family `hazard` compares
/// `λ·h(ρ − λy)/H(ρ − λy)` at the two values on the common support, relative to
/// the larger side.
pub fn check_mlr_marginal(
    bt: &BallTruncation,
    n: usize,
    lam_lo: f64,
    lam_hi: f64,
    y_grid: &[f64],
    tol: f64,
) -> Result<SlackReport> {
    if n >= bt.nu() {
        return domain(format!("coordinate index {n} out of range for nu = {}", bt.nu()));
    }
    if !(lam_lo > 0.0 && lam_hi > lam_lo && lam_hi.is_finite()) {
        return domain(format!("need 0 < lam_lo < lam_hi, got {lam_lo}, {lam_hi}"));
    }
    let rho = bt.rho();
    check_increasing("y", y_grid, 0.0, rho / lam_lo)?;
    let h = bt.marginal_expansion(n);
    let ratio = |y: f64| -> Result<f64> {
        let hi = rho - lam_hi * y;
        if hi <= 0.0 {
            return Ok(0.0);
        }
        match h {
            None => Ok(1.0),
            Some(e) => Ok(e.cdf(hi)?.value / e.cdf(rho - lam_lo * y)?.value),
        }
    };
    let values: Vec<f64> = y_grid.iter().map(|y| ratio(*y)).collect::<Result<_>>()?;
    let mut points: Vec<(String, Vec<f64>, f64)> = y_grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(y, r)| ("ratio".to_string(), vec![y[0], y[1]], r[0] - r[1]))
        .collect();
    if let Some(e) = h {
        for y in y_grid.iter().filter(|y| rho - lam_hi * **y > 0.0) {
            let hi = scaled_hazard(e, lam_hi, rho - lam_hi * y)?;
            let lo = scaled_hazard(e, lam_lo, rho - lam_lo * y)?;
            points.push(("hazard".into(), vec![*y, *y], (hi - lo) / hi));
        }
    }
    Ok(SlackReport::build(
        Claim::MlrMarginal.as_str(),
        "psi(y; lam_hi) / psi(y; lam_lo) is nonincreasing in y, including the drop to zero; \
         equivalently lam_lo h(rho - lam_lo y)/H(rho - lam_lo y) <= lam_hi h(rho - lam_hi y)/H(rho - lam_hi y)",
        format!(
            "lambda = {:?}, rho = {rho}, n = {n}, lam_lo = {lam_lo}, lam_hi = {lam_hi}, y: {}",
            bt.lambda(),
            describe(y_grid)
        ),
        &["y_lo", "y_hi"],
        tol,
        points,
        obs(&[("support_end_hi", rho / lam_hi), ("support_end_lo", rho / lam_lo)]),
    ))
}

/// Ratio `ψ(y₂ | y11)/ψ(y₂ | y10)` of conditional densities of `Y₂`, normalized
/// by the constant factor `H(ρ − λ₁y10)/H(ρ − λ₁y11)` (recorded as `k_tilde`).
pub fn check_mlr_conditional(bt: &BallTruncation, y10: f64, y11: f64, y2_grid: &[f64], tol: f64) -> Result<SlackReport> {
    if bt.nu() < 2 {
        return domain("the conditional ratio needs nu >= 2");
    }
    let (rho, l1, l2) = (bt.rho(), bt.lambda()[0], bt.lambda()[1]);
    if !(y10 > 0.0 && y11 > y10 && y11 < rho / l1) {
        return domain(format!("need 0 < y10 < y11 < rho/lambda_1, got {y10}, {y11}"));
    }
    let (r10, r11) = (rho - l1 * y10, rho - l1 * y11);
    check_increasing("y2", y2_grid, 0.0, r10 / l2)?;
    let tilde = bt.pair_expansion(0, 1)?;
    let k_tilde = bt.h_without(0, r10)? / bt.h_without(0, r11)?;
    let ratio = |y2: f64| -> Result<f64> {
        let hi = r11 - l2 * y2;
        if hi <= 0.0 {
            return Ok(0.0);
        }
        match &tilde {
            None => Ok(1.0),
            Some(e) => Ok(e.cdf(hi)?.value / e.cdf(r10 - l2 * y2)?.value),
        }
    };
    let values: Vec<f64> = y2_grid.iter().map(|y| ratio(*y)).collect::<Result<_>>()?;
    let points = y2_grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(y, r)| ("ratio".to_string(), vec![y[0], y[1]], r[0] - r[1]))
        .collect();
    Ok(SlackReport::build(
        Claim::MlrConditional.as_str(),
        "psi(y2 | y11) / psi(y2 | y10) is nonincreasing in y2 for y10 < y11, including the drop to zero",
        format!(
            "lambda = {:?}, rho = {rho}, y10 = {y10}, y11 = {y11}, y2: {}",
            bt.lambda(),
            describe(y2_grid)
        ),
        &["y2_lo", "y2_hi"],
        tol,
        points,
        obs(&[("k_tilde", k_tilde)]),
    ))
}

/// `E(Y₂ | Y₁ = y₁)` is nonincreasing in `y₁`.
pub fn check_conditional_mean(bt: &BallTruncation, y1_grid: &[f64], tol: f64) -> Result<SlackReport> {
    if bt.nu() < 2 {
        return domain("the conditional mean needs nu >= 2");
    }
    check_increasing("y1", y1_grid, 0.0, bt.rho() / bt.lambda()[0])?;
    let tilde = bt.pair_expansion(0, 1)?;
    let q = quad_tol_for(tol);
    let means: Vec<f64> = y1_grid
        .iter()
        .map(|y| crate::truncated_ball::conditional_mean_with(bt, tilde.as_ref(), 0, 1, *y, q))
        .collect::<Result<_>>()?;
    let points = y1_grid
        .windows(2)
        .zip(means.windows(2))
        .map(|(y, m)| ("mean".to_string(), vec![y[0], y[1]], m[0] - m[1]))
        .collect();
    Ok(SlackReport::build(
        Claim::CondMean.as_str(),
        "E(Y2 | Y1 = y1) is nonincreasing in y1",
        format!("lambda = {:?}, rho = {}, y1: {}", bt.lambda(), bt.rho(), describe(y1_grid)),
        &["y1_lo", "y1_hi"],
        tol,
        points,
        BTreeMap::new(),
    ))
}

// ---------------------------------------------------------------------------
// Mixture claims

fn cdf_expansion(cv: &CoefficientVector) -> Result<RubenExpansion> {
    RubenExpansion::with_tolerance(cv, CDF_TRUNCATION, DEFAULT_K_MAX)
}

fn logconcavity_points(exp: &RubenExpansion, steps: &[(f64, f64)]) -> Result<Vec<(String, Vec<f64>, f64)>> {
    steps
        .iter()
        .map(|&(u, h)| Ok(("second-difference".to_string(), vec![u, h], -expansion_log_second_difference(exp, u, h)?)))
        .collect()
}

/// `−{log H(u+h) − 2 log H(u) + log H(u−h)}` over the grid.
pub fn check_cdf_logconcavity(cv: &CoefficientVector, u_grid: &[f64], h: f64, tol: f64) -> Result<SlackReport> {
    if !(h > 0.0) || u_grid.iter().any(|u| !(*u > h && u.is_finite())) {
        return domain("need 0 < h < min(u_grid)");
    }
    let exp = cdf_expansion(cv)?;
    let steps: Vec<(f64, f64)> = u_grid.iter().map(|u| (*u, h)).collect();
    Ok(SlackReport::build(
        Claim::Logconcavity.as_str(),
        LOGCONCAVITY_STATEMENT,
        format!("a = {:?}, u: {}, h = {h}", original(cv), describe(u_grid)),
        &["u", "h"],
        tol,
        logconcavity_points(&exp, &steps)?,
        obs(&[("k_trunc", exp.k_trunc() as f64)]),
    ))
}

const LOGCONCAVITY_STATEMENT: &str =
    "the cdf of a positive combination of independent chi-square variates is log-concave";

fn original(cv: &CoefficientVector) -> Vec<f64> {
    cv.coefficients().iter().map(|a| a * cv.scale()).collect()
}

/// Slacks of the two weight-sequence inequalities, both relative:
/// `(W_i² − W_{i−1}W_{i+1})/W_i²` and `1 − (i+1)p_{i+1}W_{i−1}/(i p_i W_i)`.
pub fn weight_slacks(exp: &RubenExpansion) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let (p, w) = (exp.p(), exp.w());
    let k = exp.k_trunc();
    let mut partial = Vec::new();
    let mut ratio = Vec::new();
    for i in 1..k {
        let wi = w[i];
        // W_i² − (W_i − p_i)(W_i + p_{i+1}), expanded to avoid cancellation.
        let gap = wi * (p[i] - p[i + 1]) + p[i] * p[i + 1];
        partial.push((i, gap / (wi * wi)));
        if p[i] > 0.0 {
            let lhs = (i + 1) as f64 * p[i + 1] * w[i - 1];
            ratio.push((i, 1.0 - lhs / (i as f64 * p[i] * wi)));
        }
    }
    (partial, ratio)
}

/// Log-concavity of the partial sums `W_i` and the stronger ratio inequality,
/// with the log-concavity of `p_j` itself recorded as an observation.
pub fn check_weight_lemmas(cv: &CoefficientVector, k: usize, tol: f64) -> Result<SlackReport> {
    if k < 2 {
        return domain(format!("weight checks need K >= 2, got {k}"));
    }
    let exp = RubenExpansion::with_order(cv, k);
    let (partial, ratio) = weight_slacks(&exp);
    let mut points: Vec<(String, Vec<f64>, f64)> =
        partial.into_iter().map(|(i, s)| ("partial-sums".to_string(), vec![i as f64], s)).collect();
    points.extend(ratio.into_iter().map(|(i, s)| ("ratio".to_string(), vec![i as f64], s)));
    let p = exp.p();
    let weight_lc = (1..k)
        .filter(|&j| p[j] > 0.0)
        .map(|j| (p[j] * p[j] - p[j - 1] * p[j + 1]) / (p[j] * p[j]))
        .fold(f64::INFINITY, f64::min);
    let observations = obs(&[
        ("p1_over_p0", if p[0] > 0.0 { p[1] / p[0] } else { f64::NAN }),
        ("weights_logconcave", if weight_lc >= 0.0 { 1.0 } else { 0.0 }),
        ("weights_logconcavity_worst", if weight_lc.is_finite() { weight_lc } else { 0.0 }),
        ("tail", exp.tail()),
    ]);
    Ok(SlackReport::build(
        Claim::Weights.as_str(),
        "W_i^2 >= W_(i-1) W_(i+1) and (i+1) p_(i+1) / (i p_i) <= W_i / W_(i-1) for i >= 1",
        format!("a = {:?}, 1 <= i <= {}", original(cv), k - 1),
        &["i"],
        tol,
        points,
        observations,
    ))
}

/// `(p₀p₂ − p₁²)/16` from the closed-form two-term weights.
pub fn remark1_limit(c2: f64) -> Result<f64> {
    if !(c2 > 0.0 && c2 < 1.0) {
        return domain(format!("c2 must lie in (0, 1), got {c2}"));
    }
    let p0 = (1.0 - c2).sqrt();
    let p1 = 0.5 * c2 * p0;
    let p2 = 0.375 * c2 * c2 * p0;
    Ok((p0 * p2 - p1 * p1) / 16.0)
}

/// Two-step Richardson extrapolation of the density defect to `u → 0+`.
pub fn remark1_extrapolated(exp: &RubenExpansion, u0: f64) -> Result<f64> {
    let defect = |u: f64| -> Result<f64> {
        let [h, d1, d2] = exp.density_derivatives(u)?;
        Ok(h * d2 - d1 * d1)
    };
    let (d1, d2, d4) = (defect(u0)?, defect(0.5 * u0)?, defect(0.25 * u0)?);
    Ok((8.0 * d4 - 6.0 * d2 + d1) / 3.0)
}

/// The density of the two-term combination is not log-concave near 0 while its cdf is.
///
/// Families: `defect` (the defect itself, positive where log-concavity fails),
/// `limit` (`1e-6` minus the relative error of the extrapolated limit) and
/// `cdf` (log-cdf second-difference slack at the same points).
pub fn check_remark1_counterexample(c2: f64, u_grid: &[f64], tol: f64) -> Result<SlackReport> {
    let target = remark1_limit(c2)?;
    check_increasing("u", u_grid, 0.0, f64::INFINITY)?;
    let cv = crate::ruben::two_term(c2)?;
    let exp = cdf_expansion(&cv)?;
    let mut points = Vec::new();
    for u in u_grid {
        let [h, d1, d2] = exp.density_derivatives(*u)?;
        points.push(("defect".to_string(), vec![*u], h * d2 - d1 * d1));
    }
    let limit = remark1_extrapolated(&exp, u_grid[0])?;
    let rel = (limit - target).abs() / target;
    points.push(("limit".into(), vec![u_grid[0]], 1e-6 - rel));
    let steps: Vec<(f64, f64)> = u_grid.iter().map(|u| (*u, 0.5 * u)).collect();
    for (_, coords, slack) in logconcavity_points(&exp, &steps)? {
        points.push(("cdf".into(), vec![coords[0]], slack));
    }
    Ok(SlackReport::build(
        Claim::Remark1.as_str(),
        "for a = (1, 1/(1 - c2)) the density defect h h'' - h'^2 is positive as u -> 0+ and tends to \
         (p0 p2 - p1^2)/16, while the cdf stays log-concave",
        format!("c2 = {c2}, u: {}", describe(u_grid)),
        &["u"],
        tol,
        points,
        obs(&[("limit_target", target), ("limit_extrapolated", limit), ("limit_relative_error", rel)]),
    ))
}

// ---------------------------------------------------------------------------
// Grid drivers

/// One truncation instance of the default moment grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub nu: usize,
    pub spread: f64,
    pub rho_ratio: f64,
    pub lambda: Vec<f64>,
    pub rho: f64,
}

/// Geometric variances `1, …, spread`.
pub fn geometric_lambda(nu: usize, spread: f64) -> Vec<f64> {
    if nu == 1 {
        return vec![1.0];
    }
    (0..nu).map(|i| spread.powf(i as f64 / (nu - 1) as f64)).collect()
}

/// Grid over dimensions, variance spreads and `ρ/Σλ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallGrid {
    pub nus: Vec<usize>,
    pub spreads: Vec<f64>,
    pub rho_ratios: Vec<f64>,
}

impl Default for BallGrid {
    fn default() -> Self {
        Self { nus: vec![1, 2, 3, 5], spreads: vec![1.0, 10.0, 100.0], rho_ratios: log_space(0.05, 50.0, 25) }
    }
}

impl BallGrid {
    pub fn instances(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        for &nu in &self.nus {
            let spreads: &[f64] = if nu == 1 { &[1.0] } else { &self.spreads };
            for &spread in spreads {
                let lambda = geometric_lambda(nu, spread);
                let total: f64 = lambda.iter().sum();
                for &rho_ratio in &self.rho_ratios {
                    out.push(Instance { nu, spread, rho_ratio, lambda: lambda.clone(), rho: rho_ratio * total });
                }
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        format!(
            "nu in {:?}; lambda geometric from 1 to spread, spread in {:?}; rho/sum(lambda): {}",
            self.nus,
            self.spreads,
            describe(&self.rho_ratios)
        )
    }

    fn validate(&self) -> Result<()> {
        if self.nus.is_empty() || self.nus.contains(&0) {
            return domain("grid dimensions must be positive");
        }
        if self.spreads.iter().any(|s| !(*s >= 1.0 && s.is_finite())) {
            return domain("variance spreads must be finite and at least 1");
        }
        if self.rho_ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return domain("rho ratios must be positive and finite");
        }
        Ok(())
    }
}

/// Settings shared by the grid drivers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub grid: BallGrid,
    /// Overrides every claim's default tolerance when set.
    pub tol: Option<f64>,
    /// Seed for the randomized coefficient sets.
    pub seed: u64,
    /// Number of randomized coefficient sets.
    pub sets: usize,
    pub c2: f64,
    pub h_rel: f64,
    /// Largest index for the weight inequalities.
    pub k: usize,
    pub t_grid: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: BallGrid::default(),
            tol: None,
            seed: crate::DEFAULT_SEED,
            sets: 100,
            c2: 0.5,
            h_rel: DEFAULT_H_REL,
            k: 200,
            t_grid: log_space(0.01, 10.0, 500),
        }
    }
}

impl VerifyConfig {
    fn tol(&self, claim: Claim) -> f64 {
        self.tol.unwrap_or(claim.default_tol())
    }
}

fn prefixed(
    parts: Vec<(Vec<f64>, Vec<(String, Vec<f64>, f64)>)>,
) -> Vec<(String, Vec<f64>, f64)> {
    parts
        .into_iter()
        .flat_map(|(prefix, pts)| {
            pts.into_iter().map(move |(family, coords, slack)| {
                let mut c = prefix.clone();
                c.extend(coords);
                (family, c, slack)
            })
        })
        .collect()
}

fn instance_prefix(inst: &Instance) -> Vec<f64> {
    vec![inst.nu as f64, inst.spread, inst.rho_ratio]
}

/// Moment reports over the whole grid, in grid order.
pub fn grid_moments(grid: &BallGrid, quad_tol: f64) -> Result<Vec<(Instance, BallTruncation, MomentReport)>> {
    grid.validate()?;
    grid.instances()
        .into_par_iter()
        .map(|inst| {
            let bt = BallTruncation::new(&inst.lambda, inst.rho)?;
            let report = moments(&bt, quad_tol)?;
            Ok((inst, bt, report))
        })
        .collect()
}

fn variance_grid(cfg: &VerifyConfig, table: &[(Instance, BallTruncation, MomentReport)]) -> SlackReport {
    let parts = table.iter().map(|(i, bt, r)| (instance_prefix(i), variance_points(bt, r))).collect();
    let worst_err = table.iter().map(|(_, _, r)| r.quad_err).fold(0.0, f64::max);
    SlackReport::build(
        Claim::Variance.as_str(),
        VARIANCE_STATEMENT,
        cfg.grid.describe(),
        &["nu", "spread", "rho_ratio", "n", "lambda_n", "rho"],
        cfg.tol(Claim::Variance),
        prefixed(parts),
        obs(&[("quad_err", worst_err)]),
    )
}

fn covariance_grid(cfg: &VerifyConfig, table: &[(Instance, BallTruncation, MomentReport)]) -> SlackReport {
    let parts = table.iter().map(|(i, bt, r)| (instance_prefix(i), covariance_points(bt, r))).collect();
    let worst_err = table.iter().map(|(_, _, r)| r.quad_err).fold(0.0, f64::max);
    SlackReport::build(
        Claim::Covariance.as_str(),
        COVARIANCE_STATEMENT,
        cfg.grid.describe(),
        &["nu", "spread", "rho_ratio", "n", "m", "rho"],
        cfg.tol(Claim::Covariance),
        prefixed(parts),
        obs(&[("quad_err", worst_err)]),
    )
}

fn derivative_grid(cfg: &VerifyConfig, table: &[(Instance, BallTruncation, MomentReport)]) -> Result<SlackReport> {
    let tol = cfg.tol(Claim::Derivative);
    let rows: Vec<(Vec<f64>, f64, f64)> = table
        .par_iter()
        .flat_map_iter(|(inst, bt, report)| {
            let var = variance_slacks(bt, report);
            (0..bt.nu()).map(move |n| {
                let mut coords = instance_prefix(inst);
                coords.extend([n as f64, bt.lambda()[n], bt.rho()]);
                (coords, bt.clone(), n, var[n])
            })
        })
        .map(|(coords, bt, n, var)| Ok((coords, derivative_slack(&bt, n, cfg.h_rel)?, var)))
        .collect::<Result<_>>()?;
    let gap = rows.iter().map(|(_, fd, var)| (fd - 0.5 * var).abs()).fold(0.0, f64::max);
    let disagreements = rows.iter().filter(|(_, fd, var)| (*fd >= -tol) != (*var >= -tol)).count();
    let points = rows.into_iter().map(|(c, fd, _)| ("derivative".to_string(), c, fd)).collect();
    Ok(SlackReport::build(
        Claim::Derivative.as_str(),
        DERIVATIVE_STATEMENT,
        format!("{}; h_rel = {}", cfg.grid.describe(), cfg.h_rel),
        &["nu", "spread", "rho_ratio", "n", "lambda_n", "rho"],
        tol,
        points,
        obs(&[("equivalence_gap", gap), ("sign_disagreements", disagreements as f64)]),
    ))
}

/// Interior grid `(i + ½)·end/count`, strictly inside `(0, end)`.
fn midpoints(end: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| end * (i as f64 + 0.5) / count as f64).collect()
}

const MLR_RHOS: [f64; 3] = [1.0, 4.0, 20.0];
const MLR_LAMBDA: [f64; 4] = [1.0, 1.0, 2.0, 3.0];

fn mlr_marginal_grid(cfg: &VerifyConfig) -> Result<SlackReport> {
    let tol = cfg.tol(Claim::MlrMarginal);
    let cases: Vec<(usize, f64, f64, f64)> = [1usize, 2, 3, 4]
        .into_iter()
        .flat_map(|nu| MLR_RHOS.into_iter().flat_map(move |rho| [(0.5, 1.0), (1.0, 2.0), (1.0, 10.0)].map(|(lo, hi)| (nu, rho, lo, hi))))
        .collect();
    let parts = cases
        .into_par_iter()
        .map(|(nu, rho, lo, hi)| {
            let bt = BallTruncation::new(&MLR_LAMBDA[..nu], rho)?;
            let y = midpoints(rho / lo, 40);
            let r = check_mlr_marginal(&bt, 0, lo, hi, &y, tol)?;
            let pts = r.points.into_iter().map(|p| (p.family, p.coords, p.slack)).collect();
            Ok((vec![nu as f64, rho, lo, hi], pts))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlackReport::build(
        Claim::MlrMarginal.as_str(),
        "psi(y; lam_hi) / psi(y; lam_lo) is nonincreasing in y, including the drop to zero",
        format!(
            "nu in {{1,2,3,4}}, other variances {:?}, rho in {MLR_RHOS:?}, (lam_lo, lam_hi) in {{(0.5,1), (1,2), (1,10)}}, \
             y: 40 midpoints of (0, rho/lam_lo)",
            &MLR_LAMBDA[1..]
        ),
        &["nu", "rho", "lam_lo", "lam_hi", "y_lo", "y_hi"],
        tol,
        prefixed(parts),
        BTreeMap::new(),
    ))
}

fn mlr_conditional_grid(cfg: &VerifyConfig) -> Result<SlackReport> {
    let tol = cfg.tol(Claim::MlrConditional);
    let cases: Vec<(usize, f64, f64, f64)> = [2usize, 3, 4]
        .into_iter()
        .flat_map(|nu| MLR_RHOS.into_iter().flat_map(move |rho| [(0.1, 0.3), (0.2, 0.7)].map(|(a, b)| (nu, rho, a, b))))
        .collect();
    let parts = cases
        .into_par_iter()
        .map(|(nu, rho, f10, f11)| {
            let bt = BallTruncation::new(&MLR_LAMBDA[..nu], rho)?;
            let (l1, l2) = (MLR_LAMBDA[0], MLR_LAMBDA[1]);
            let (y10, y11) = (f10 * rho / l1, f11 * rho / l1);
            let y2 = midpoints((rho - l1 * y10) / l2, 40);
            let r = check_mlr_conditional(&bt, y10, y11, &y2, tol)?;
            let pts = r.points.into_iter().map(|p| (p.family, p.coords, p.slack)).collect();
            Ok((vec![nu as f64, rho, y10, y11], pts))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlackReport::build(
        Claim::MlrConditional.as_str(),
        "psi(y2 | y11) / psi(y2 | y10) is nonincreasing in y2 for y10 < y11, including the drop to zero",
        format!(
            "nu in {{2,3,4}}, lambda prefix of {MLR_LAMBDA:?}, rho in {MLR_RHOS:?}, \
             (y10, y11)/(rho/lambda_1) in {{(0.1,0.3), (0.2,0.7)}}, y2: 40 midpoints of the support"
        ),
        &["nu", "rho", "y10", "y11", "y2_lo", "y2_hi"],
        tol,
        prefixed(parts),
        BTreeMap::new(),
    ))
}

fn cond_mean_grid(cfg: &VerifyConfig) -> Result<SlackReport> {
    let tol = cfg.tol(Claim::CondMean);
    let cases: Vec<(usize, f64)> =
        [2usize, 3, 4].into_iter().flat_map(|nu| MLR_RHOS.into_iter().map(move |rho| (nu, rho))).collect();
    let parts = cases
        .into_par_iter()
        .map(|(nu, rho)| {
            let bt = BallTruncation::new(&MLR_LAMBDA[..nu], rho)?;
            let y1 = midpoints(rho / MLR_LAMBDA[0], 20);
            let r = check_conditional_mean(&bt, &y1, tol)?;
            let pts = r.points.into_iter().map(|p| (p.family, p.coords, p.slack)).collect();
            Ok((vec![nu as f64, rho], pts))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlackReport::build(
        Claim::CondMean.as_str(),
        "E(Y2 | Y1 = y1) is nonincreasing in y1",
        format!("nu in {{2,3,4}}, lambda prefix of {MLR_LAMBDA:?}, rho in {MLR_RHOS:?}, y1: 20 midpoints of the support"),
        &["nu", "rho", "y1_lo", "y1_hi"],
        tol,
        prefixed(parts),
        BTreeMap::new(),
    ))
}

/// Fixed anchor sets followed by `count` seeded random sets with
/// `2 ≤ s ≤ 8` and log-uniform coefficients in `[1, 100]`.
pub fn coefficient_sets(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut sets = vec![vec![1.0, 5.0, 5.0, 5.0], vec![1.0, 1.0, 1.0], vec![1.0, 2.0], vec![1.0, 2.0, 3.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while sets.len() < count.max(4) {
        let s = rng.random_range(2..=8);
        sets.push((0..s).map(|_| 100f64.powf(rng.random::<f64>())).collect());
    }
    sets.truncate(count.max(1));
    sets
}

/// The default u-grid for a coefficient set: `Σa` times log-spaced ratios.
pub fn logconcavity_steps(a: &[f64]) -> Vec<(f64, f64)> {
    let total: f64 = a.iter().sum();
    log_space(1e-3, 20.0, 40).into_iter().map(|r| (r * total, 0.1 * r * total)).collect()
}

fn logconcavity_grid(cfg: &VerifyConfig) -> Result<SlackReport> {
    let sets = coefficient_sets(cfg.sets, cfg.seed);
    let parts = sets
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let exp = cdf_expansion(&CoefficientVector::normalize(a)?)?;
            Ok((vec![i as f64], logconcavity_points(&exp, &logconcavity_steps(a))?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlackReport::build(
        Claim::Logconcavity.as_str(),
        LOGCONCAVITY_STATEMENT,
        format!(
            "{} coefficient sets (anchors then seeded log-uniform in [1, 100], seed {}); u = sum(a) times 40 log-spaced \
             ratios in [1e-3, 20], h = u/10",
            sets.len(),
            cfg.seed
        ),
        &["set", "u", "h"],
        cfg.tol(Claim::Logconcavity),
        prefixed(parts),
        BTreeMap::new(),
    ))
}

fn weights_grid(cfg: &VerifyConfig) -> Result<SlackReport> {
    let sets = coefficient_sets(cfg.sets, cfg.seed);
    let tol = cfg.tol(Claim::Weights);
    let mut parts = Vec::new();
    let mut not_logconcave = 0.0;
    for (i, a) in sets.iter().enumerate() {
        let r = check_weight_lemmas(&CoefficientVector::normalize(a)?, cfg.k + 1, tol)?;
        if r.observations["weights_logconcave"] == 0.0 {
            not_logconcave += 1.0;
        }
        parts.push((vec![i as f64], r.points.into_iter().map(|p| (p.family, p.coords, p.slack)).collect()));
    }
    Ok(SlackReport::build(
        Claim::Weights.as_str(),
        "W_i^2 >= W_(i-1) W_(i+1) and (i+1) p_(i+1) / (i p_i) <= W_i / W_(i-1) for i >= 1",
        format!("{} coefficient sets (seed {}), 1 <= i <= {}", sets.len(), cfg.seed, cfg.k),
        &["set", "i"],
        tol,
        prefixed(parts),
        obs(&[("sets_with_non_logconcave_weights", not_logconcave)]),
    ))
}

/// Default u-grid for the density defect check.
pub fn remark1_grid() -> Vec<f64> {
    log_space(1e-4, 0.5, 20)
}

/// Run one claim (or all of them) over the configured grids.
pub fn run(claim: Claim, cfg: &VerifyConfig) -> Result<Vec<SlackReport>> {
    let claims: Vec<Claim> = if claim == Claim::All { Claim::EACH.to_vec() } else { vec![claim] };
    let needs_moments = claims.iter().any(|c| matches!(c, Claim::Variance | Claim::Covariance | Claim::Derivative));
    let table = if needs_moments {
        let q = quad_tol_for(cfg.tol.unwrap_or(QUADRATURE_TOL));
        grid_moments(&cfg.grid, q)?
    } else {
        Vec::new()
    };
    claims
        .into_iter()
        .map(|c| match c {
            Claim::Mu => check_mu_monotone(&cfg.t_grid, cfg.tol(c)),
            Claim::Variance => Ok(variance_grid(cfg, &table)),
            Claim::Covariance => Ok(covariance_grid(cfg, &table)),
            Claim::Derivative => derivative_grid(cfg, &table),
            Claim::MlrMarginal => mlr_marginal_grid(cfg),
            Claim::MlrConditional => mlr_conditional_grid(cfg),
            Claim::CondMean => cond_mean_grid(cfg),
            Claim::Logconcavity => logconcavity_grid(cfg),
            Claim::Weights => weights_grid(cfg),
            Claim::Remark1 => check_remark1_counterexample(cfg.c2, &remark1_grid(), cfg.tol(c)),
            Claim::All => unreachable!("expanded above"),
        })
        .collect()
}
