//! Distribution of `U = Σ aᵢ Yᵢ` for independent one-degree chi-square `Yᵢ`
//! and positive `aᵢ`, as a mixture of central chi-square laws:
//!
//! ```text
//! H(u) = Σ_j p_j G_{s+2j}(u),    p_0 = Π_{i≥2} aᵢ^{-1/2},
//! p_j = j⁻¹ Σ_{i<j} M_{j−i} p_i, M_j = ½ Σ_{i≥2} cᵢ^j,  cᵢ = 1 − 1/aᵢ,
//! ```
//!
//! with coefficients normalized so that `a₁ = 1 ≤ a₂ ≤ … ≤ a_s`. The weights
//! form a probability sequence, so truncating after `p_K` costs at most
//! `(1 − W_K)·G_{s+2K+2}(u) ≤ 1 − W_K` in the cdf.

use serde::Serialize;

use crate::distributions::{ln_gamma, poisson_kernel, regularized_gamma_p};
use crate::error::{domain, Error, Result};

/// Default ceiling on the truncation order.
pub const DEFAULT_K_MAX: usize = 20_000;

/// Positive coefficients sorted ascending and divided by their minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientVector {
    coeffs: Vec<f64>,
    scale: f64,
}

impl CoefficientVector {
    /// Sort (stably) and divide by the smallest coefficient.
    pub fn normalize(a: &[f64]) -> Result<Self> {
        if a.is_empty() {
            return domain("coefficient list is empty");
        }
        if let Some(bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return domain(format!("coefficients must be positive and finite, got {bad}"));
        }
        let mut sorted = a.to_vec();
        sorted.sort_by(|x, y| x.total_cmp(y));
        let scale = sorted[0];
        let coeffs = sorted.iter().map(|v| v / scale).collect();
        Ok(Self { coeffs, scale })
    }

    /// Build from `(coefficient, degrees of freedom)` terms by repeating each
    /// coefficient once per degree of freedom. Degrees of freedom must be
    /// positive integers.
    pub fn from_chi_square_terms(terms: &[(f64, f64)]) -> Result<Self> {
        let mut expanded = Vec::new();
        for &(a, df) in terms {
            if !(df.is_finite() && df >= 1.0 && df == df.round()) {
                return domain(format!("degrees of freedom must be a positive integer, got {df}"));
            }
            expanded.extend(std::iter::repeat_n(a, df as usize));
        }
        Self::normalize(&expanded)
    }

    /// Normalized coefficients; the first one is exactly 1.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// The divisor applied during normalization (the smallest input coefficient).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of one-degree terms `s`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `cᵢ = 1 − 1/aᵢ` for `i ≥ 2`.
    pub fn c(&self) -> Vec<f64> {
        self.coeffs[1..].iter().map(|a| 1.0 - 1.0 / a).collect()
    }
}

/// Free-function form of [`CoefficientVector::normalize`].
pub fn normalize(a: &[f64]) -> Result<CoefficientVector> {
    CoefficientVector::normalize(a)
}

/// Incremental evaluation of the weight recursion.
///
/// `Σ_{i<j} M_{j−i} p_i = ½ Σ_k S_k(j)` with `S_k(j) = Σ_{i<j} c_k^{j−i} p_i`,
/// and `S_k(j+1) = c_k (S_k(j) + p_j)`. Equal `c` values share one running sum.
/// Weights are carried relative to a unit `exp(log_unit)` so that `p₀` may
/// underflow without losing the sequence.
struct WeightRecursion {
    groups: Vec<(f64, f64)>,
    sums: Vec<f64>,
    rel: Vec<f64>,
    log_unit: f64,
    unit: f64,
    j: usize,
}

const RESCALE_ABOVE: f64 = 1e250;

impl WeightRecursion {
    fn new(cv: &CoefficientVector) -> Self {
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for c in cv.c() {
            if c == 0.0 {
                continue;
            }
            match groups.iter_mut().find(|(g, _)| *g == c) {
                Some(g) => g.1 += 1.0,
                None => groups.push((c, 1.0)),
            }
        }
        let log_unit = -0.5 * cv.coefficients()[1..].iter().map(|a| a.ln()).sum::<f64>();
        let direct: f64 = cv.coefficients()[1..].iter().map(|a| 1.0 / a.sqrt()).product();
        let unit = if direct >= 1e-300 { direct } else { 0.0 };
        let sums = vec![0.0; groups.len()];
        Self { groups, sums, rel: Vec::new(), log_unit, unit, j: 0 }
    }

    fn materialize(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else if self.unit > 0.0 {
            r * self.unit
        } else {
            (r.ln() + self.log_unit).exp()
        }
    }

    /// Produce `p_j` for the next `j`.
    fn next_weight(&mut self) -> f64 {
        let r = if self.j == 0 {
            1.0
        } else {
            let acc: f64 = self.groups.iter().zip(&self.sums).map(|((_, mult), s)| mult * s).sum();
            0.5 * acc / self.j as f64
        };
        for ((c, _), s) in self.groups.iter().zip(self.sums.iter_mut()) {
            *s = c * (*s + r);
        }
        self.rel.push(r);
        self.j += 1;
        if r > RESCALE_ABOVE {
            let shrink = 1.0 / RESCALE_ABOVE;
            self.rel.iter_mut().for_each(|v| *v *= shrink);
            self.sums.iter_mut().for_each(|v| *v *= shrink);
            self.log_unit += RESCALE_ABOVE.ln();
            self.unit = if self.log_unit > -690.0 { self.log_unit.exp() } else { 0.0 };
        }
        self.materialize(*self.rel.last().unwrap())
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mixture weights `p_0..p_K`, their partial sums and the truncation tail.
#[derive(Debug, Clone, Serialize)]
pub struct RubenExpansion {
    s: usize,
    scale: f64,
    c: Vec<f64>,
    log_p0: f64,
    p: Vec<f64>,
    w: Vec<f64>,
    tail: f64,
    #[serde(skip)]
    ln_gamma_next: Vec<f64>,
}

/// A cdf value together with its truncation error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfValue {
    pub value: f64,
    /// `(1 − W_K)·G_{s+2K+2}(u)`.
    pub error_bound: f64,
    /// `1 − W_K`, the bound that drives the choice of `K`.
    pub tail: f64,
}

impl RubenExpansion {
    fn assemble(cv: &CoefficientVector, p: Vec<f64>, w: Vec<f64>, log_p0: f64) -> Self {
        let s = cv.len();
        let tail = (1.0 - *w.last().unwrap()).max(0.0);
        let half_s = 0.5 * s as f64;
        let ln_gamma_next = (0..p.len()).map(|j| ln_gamma(half_s + j as f64 + 1.0)).collect();
        Self { s, scale: cv.scale(), c: cv.c(), log_p0, p, w, tail, ln_gamma_next }
    }

    /// Weights up to a fixed order `K`.
    pub fn with_order(cv: &CoefficientVector, k: usize) -> Self {
        let mut rec = WeightRecursion::new(cv);
        let log_p0 = rec.log_unit;
        let mut p = Vec::with_capacity(k + 1);
        let mut w = Vec::with_capacity(k + 1);
        let mut acc = Compensated::default();
        for _ in 0..=k {
            let pj = rec.next_weight();
            acc.add(pj);
            p.push(pj);
            w.push(acc.value());
        }
        Self::assemble(cv, p, w, log_p0)
    }

    /// Weights up to the smallest `K` with `1 − W_K ≤ tol`.
    pub fn with_tolerance(cv: &CoefficientVector, tol: f64, k_max: usize) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return domain(format!("truncation tolerance must lie in (0, 1), got {tol}"));
        }
        let mut rec = WeightRecursion::new(cv);
        let log_p0 = rec.log_unit;
        let mut p = Vec::new();
        let mut w = Vec::new();
        let mut acc = Compensated::default();
        let no_mixing = rec.groups.is_empty();
        loop {
            let pj = rec.next_weight();
            acc.add(pj);
            p.push(pj);
            w.push(acc.value());
            let tail = 1.0 - acc.value();
            if tail <= tol || no_mixing {
                break;
            }
            if p.len() > k_max {
                return Err(Error::Convergence {
                    what: format!("mixture truncation to tail {tol:e} within K_max = {k_max}"),
                    achieved: tail,
                });
            }
        }
        Ok(Self::assemble(cv, p, w, log_p0))
    }

    /// Number of one-degree terms.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `cᵢ`, `i = 2..s`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `M_j = ½ Σ cᵢ^j`, computed on demand.
    pub fn m(&self, j: usize) -> f64 {
        0.5 * self.c.iter().map(|c| c.powi(j as i32)).sum::<f64>()
    }

    /// `M_1..M_K`.
    pub fn m_values(&self) -> Vec<f64> {
        (1..=self.k_trunc()).map(|j| self.m(j)).collect()
    }

    /// `ln p₀`, finite even when `p₀` itself underflows.
    pub fn log_p0(&self) -> f64 {
        self.log_p0
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Partial sums `W_i = Σ_{j≤i} p_j`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Truncation order `K`.
    pub fn k_trunc(&self) -> usize {
        self.p.len() - 1
    }

    /// `1 − W_K`.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Cdf `H(u)` with error bounds.
    pub fn cdf(&self, u: f64) -> Result<CdfValue> {
        if u.is_nan() {
            return domain("cdf argument is NaN");
        }
        if u <= 0.0 {
            return Ok(CdfValue { value: 0.0, error_bound: 0.0, tail: self.tail });
        }
        let (value, top_next) = self.mixture_sums(u)?;
        Ok(CdfValue { value: value.0, error_bound: self.tail * top_next, tail: self.tail })
    }

    /// Density `h(u)`.
    pub fn pdf(&self, u: f64) -> Result<f64> {
        if u.is_nan() {
            return domain("pdf argument is NaN");
        }
        if u <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.mixture_sums(u)?.0 .1)
    }

    /// `(H(u), h(u))` in a single pass.
    pub fn cdf_pdf(&self, u: f64) -> Result<(f64, f64)> {
        if u.is_nan() {
            return domain("argument is NaN");
        }
        if u <= 0.0 {
            return Ok((0.0, 0.0));
        }
        Ok(self.mixture_sums(u)?.0)
    }

    /// Returns `((H, h), G_{s+2K+2})` at `u`.
    ///
    /// Evaluates `P(a_K, x)` once and walks down with
    /// `P(a, x) = P(a+1, x) + x^a e^{-x}/Γ(a+1)`, which only adds positive terms.
    fn mixture_sums(&self, u: f64) -> Result<((f64, f64), f64)> {
        if u.is_infinite() {
            return Ok(((*self.w.last().unwrap(), 0.0), 1.0));
        }
        let x = 0.5 * u / self.scale;
        let lx = x.ln();
        let half_s = 0.5 * self.s as f64;
        let k = self.k_trunc();
        let a_top = half_s + k as f64;
        let mut big_p = regularized_gamma_p(a_top, x)?;
        let top_term = (a_top * lx - x - self.ln_gamma_next[k]).exp();
        let top_next = (big_p - top_term).max(0.0);
        let mut cdf = Compensated::default();
        let mut pdf = Compensated::default();
        for j in (0..=k).rev() {
            let a = half_s + j as f64;
            let log_t = a * lx - x - self.ln_gamma_next[j];
            let t = if log_t > -745.0 { log_t.exp() } else { 0.0 };
            if j < k {
                big_p = (big_p + t).min(1.0);
            }
            let pj = self.p[j];
            cdf.add(pj * big_p);
            // g_{s+2j}(u·2x/u) = ½ x^{a−1} e^{−x} / Γ(a)
            pdf.add(pj * t * a / x);
        }
        let h = 0.5 * pdf.value() / self.scale;
        Ok(((cdf.value().min(1.0), h), top_next))
    }

    /// `(h, h′, h″)` by term-wise differentiation, using
    /// `g_d′ = ½ (g_{d−2} − g_d)` continued analytically below `d = 2`.
    pub fn density_derivatives(&self, u: f64) -> Result<[f64; 3]> {
        if !(u > 0.0 && u.is_finite()) {
            return domain(format!("density derivatives need u > 0, got {u}"));
        }
        let x = 0.5 * u / self.scale;
        let half_s = 0.5 * self.s as f64;
        let mut acc = [Compensated::default(); 3];
        for (j, pj) in self.p.iter().enumerate() {
            let a = half_s + j as f64 - 1.0;
            let g0 = 0.5 * poisson_kernel(a, x);
            let g1 = 0.5 * poisson_kernel(a - 1.0, x);
            let g2 = 0.5 * poisson_kernel(a - 2.0, x);
            acc[0].add(pj * g0);
            acc[1].add(pj * 0.5 * (g1 - g0));
            acc[2].add(pj * 0.25 * (g2 - 2.0 * g1 + g0));
        }
        let sc = self.scale;
        Ok([acc[0].value() / sc, acc[1].value() / (sc * sc), acc[2].value() / (sc * sc * sc)])
    }
}

/// Weights `p_0..p_K` for a fixed order.
pub fn weights(cv: &CoefficientVector, k: usize) -> RubenExpansion {
    RubenExpansion::with_order(cv, k)
}

/// Smallest `K` with `1 − W_K ≤ tol`.
pub fn choose_truncation(cv: &CoefficientVector, tol: f64, k_max: usize) -> Result<usize> {
    RubenExpansion::with_tolerance(cv, tol, k_max).map(|e| e.k_trunc())
}

/// Cdf of `Σ aᵢ Yᵢ` at `u` where `cv` carries the original scale.
pub fn cdf(cv: &CoefficientVector, u: f64, tol: f64) -> Result<CdfValue> {
    RubenExpansion::with_tolerance(cv, tol, DEFAULT_K_MAX)?.cdf(u)
}

/// Density of `Σ aᵢ Yᵢ` at `u`.
pub fn pdf(cv: &CoefficientVector, u: f64, tol: f64) -> Result<f64> {
    RubenExpansion::with_tolerance(cv, tol, DEFAULT_K_MAX)?.pdf(u)
}

/// `log H(u+h) − 2 log H(u) + log H(u−h)`; nonpositive for a log-concave cdf.
pub fn log_cdf_second_difference(cv: &CoefficientVector, u: f64, h: f64, tol: f64) -> Result<f64> {
    let exp = RubenExpansion::with_tolerance(cv, tol, DEFAULT_K_MAX)?;
    expansion_log_second_difference(&exp, u, h)
}

pub(crate) fn expansion_log_second_difference(exp: &RubenExpansion, u: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(u - h > 0.0) || !u.is_finite() {
        return domain(format!("second difference needs 0 < h < u, got u={u}, h={h}"));
    }
    let lo = exp.cdf(u - h)?.value.ln();
    let mid = exp.cdf(u)?.value.ln();
    let hi = exp.cdf(u + h)?.value.ln();
    Ok((hi - mid) - (mid - lo))
}

/// The two-term expansion with `a = (1, 1/(1 − c₂))`.
pub fn two_term(c2: f64) -> Result<CoefficientVector> {
    if !(c2 > 0.0 && c2 < 1.0) {
        return domain(format!("c2 must lie in (0, 1), got {c2}"));
    }
    CoefficientVector::normalize(&[1.0, 1.0 / (1.0 - c2)])
}

/// `h(u)h″(u) − h′(u)²` for the two-term combination with parameter `c₂`.
/// Positive values mean the density is not log-concave at `u`.
pub fn density_logconcavity_defect(c2: f64, u: f64, tol: f64) -> Result<f64> {
    let cv = two_term(c2)?;
    let exp = RubenExpansion::with_tolerance(&cv, tol, DEFAULT_K_MAX)?;
    let [h, d1, d2] = exp.density_derivatives(u)?;
    Ok(h * d2 - d1 * d1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{chisq_cdf, chisq_pdf, DegreesOfFreedom};

    fn cv(a: &[f64]) -> CoefficientVector {
        CoefficientVector::normalize(a).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let v = cv(&[3.0, 1.0, 2.0]);
        assert_eq!(v.coefficients(), &[1.0, 2.0, 3.0]);
        assert_eq!(v.scale(), 1.0);
        let v = cv(&[2.0, 2.0]);
        assert_eq!(v.coefficients(), &[1.0, 1.0]);
        assert_eq!(v.scale(), 2.0);
        let v = cv(&[1.0, 5.0, 5.0, 5.0]);
        assert_eq!(v.coefficients(), &[1.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(normalize(&[]).is_err());
        assert!(normalize(&[1.0, 0.0]).is_err());
        assert!(normalize(&[1.0, -2.0]).is_err());
        assert!(normalize(&[1.0, f64::NAN]).is_err());
        assert!(normalize(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn integer_df_terms_repeat_coefficients() {
        let v = CoefficientVector::from_chi_square_terms(&[(2.0, 3.0), (4.0, 1.0)]).unwrap();
        assert_eq!(v.coefficients(), &[1.0, 1.0, 1.0, 2.0]);
        assert_eq!(v.scale(), 2.0);
        assert!(CoefficientVector::from_chi_square_terms(&[(1.0, 1.5)]).is_err());
        assert!(CoefficientVector::from_chi_square_terms(&[(1.0, 0.0)]).is_err());
    }

    #[test]
    fn weight_ratio_instance() {
        let e = weights(&cv(&[1.0, 5.0, 5.0, 5.0]), 1);
        assert_eq!(e.c(), &[0.8, 0.8, 0.8]);
        assert!((e.m(1) - 1.2).abs() < 1e-15);
        let ratio = e.p()[1] / e.p()[0];
        assert!((ratio - 1.2).abs() < 1e-14);
        assert!((e.p()[0] - 5f64.powf(-1.5)).abs() < 1e-16);
    }

    #[test]
    fn equal_coefficients_are_degenerate() {
        let e = weights(&cv(&[1.0, 1.0, 1.0]), 6);
        assert_eq!(e.p()[0], 1.0);
        assert!(e.p()[1..].iter().all(|p| *p == 0.0));
        assert_eq!(e.tail(), 0.0);
        assert_eq!(choose_truncation(&cv(&[1.0, 1.0]), 1e-10, 10).unwrap(), 0);
    }

    #[test]
    fn fixed_k_zero_keeps_p0_only() {
        let e = weights(&cv(&[1.0, 4.0]), 0);
        assert_eq!(e.k_trunc(), 0);
        assert_eq!(e.p(), &[0.5]);
        assert_eq!(e.tail(), 0.5);
    }

    #[test]
    fn truncation_budget_exhaustion_reports_tail() {
        let err = choose_truncation(&cv(&[1.0, 100.0, 100.0]), 1e-12, 50).unwrap_err();
        match err {
            Error::Convergence { achieved, .. } => assert!(achieved > 1e-12 && achieved < 1.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(RubenExpansion::with_tolerance(&cv(&[1.0, 2.0]), 0.0, 10).is_err());
        assert!(RubenExpansion::with_tolerance(&cv(&[1.0, 2.0]), 1.0, 10).is_err());
    }

    #[test]
    fn underflowing_p0_keeps_a_probability_sequence() {
        // p₀ = 1e-3^{1200/2}... far below the f64 range
        let a: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat_n(1000.0, 240)).collect();
        let e = RubenExpansion::with_tolerance(&cv(&a), 1e-6, 200_000).unwrap();
        assert!(e.log_p0() < -800.0);
        assert_eq!(e.p()[0], 0.0);
        assert!(e.tail() <= 1e-6);
        assert!(e.p().iter().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn single_and_equal_terms_reduce_to_chi_square() {
        let three = cv(&[1.0, 1.0, 1.0]);
        for u in [0.05, 1.0, 3.0, 17.0] {
            let h = cdf(&three, u, 1e-12).unwrap().value;
            let g3 = chisq_cdf(DegreesOfFreedom::new(3.0).unwrap(), u).unwrap();
            assert!((h - g3).abs() < 1e-14);
        }
        for c in [0.3, 2.0, 7.5] {
            let one = cv(&[c]);
            for u in [0.1, 2.0, 9.0] {
                let h = cdf(&one, u, 1e-12).unwrap().value;
                let g1 = chisq_cdf(DegreesOfFreedom::new(1.0).unwrap(), u / c).unwrap();
                assert!((h - g1).abs() < 1e-15);
                let d = pdf(&one, u, 1e-12).unwrap();
                let g = chisq_pdf(DegreesOfFreedom::new(1.0).unwrap(), u / c).unwrap() / c;
                assert!((d - g).abs() < 1e-14 * g);
            }
        }
        let two = cv(&[1.0, 1.0]);
        for u in [0.2, 4.0] {
            let d = pdf(&two, u, 1e-12).unwrap();
            assert!((d - 0.5 * (-0.5 * u).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn cdf_is_zero_off_support() {
        let v = cv(&[1.0, 2.0]);
        assert_eq!(cdf(&v, 0.0, 1e-10).unwrap().value, 0.0);
        assert_eq!(cdf(&v, -1.0, 1e-10).unwrap().value, 0.0);
        assert_eq!(pdf(&v, -1.0, 1e-10).unwrap(), 0.0);
        assert!(cdf(&v, f64::NAN, 1e-10).is_err());
    }

    #[test]
    fn error_bound_is_sharper_than_tail() {
        let v = cv(&[1.0, 3.0, 9.0]);
        let e = RubenExpansion::with_tolerance(&v, 1e-6, DEFAULT_K_MAX).unwrap();
        for u in [0.5, 5.0, 50.0, 500.0] {
            let r = e.cdf(u).unwrap();
            assert!(r.error_bound <= r.tail);
            assert!(r.tail <= 1e-6);
        }
    }

    #[test]
    fn second_difference_domain() {
        let v = cv(&[1.0, 2.0]);
        assert!(log_cdf_second_difference(&v, 0.1, 0.1, 1e-10).is_err());
        assert!(log_cdf_second_difference(&v, 1.0, 0.0, 1e-10).is_err());
        assert!(log_cdf_second_difference(&v, 3.0, 0.1, 1e-10).unwrap() <= 0.0);
    }

    #[test]
    fn defect_domain_and_sign() {
        assert!(density_logconcavity_defect(0.0, 0.1, 1e-12).is_err());
        assert!(density_logconcavity_defect(1.0, 0.1, 1e-12).is_err());
        assert!(density_logconcavity_defect(0.5, 0.0, 1e-12).is_err());
        let d = density_logconcavity_defect(0.8, 0.01, 1e-12).unwrap();
        assert!((d - 9.940_184_610_630_829_6e-4).abs() < 1e-12, "{d}");
    }
}
