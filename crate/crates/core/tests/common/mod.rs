//! Independent oracles shared by the integration tests.
//!
//! None of these call into the library's numerics: the characteristic-function inversion, the
//! Monte Carlo estimator, the literal power-sum recursion and the quadrature
//! rule here are written from scratch so that agreement means something.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre over `panels` equal panels of `[a, b]`.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += half * rule.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>();
    }
    total
}

/// Inversion of the characteristic function of `Σ aᵢ Zᵢ²` at `u`.
///
/// Needs `s ≥ 3` so the integrand decays like `t^{-1-s/2}`; the truncation
/// point is chosen so the neglected tail is below `1e-8`.
pub fn inversion_cdf(a: &[f64], u: f64) -> f64 {
    assert!(a.len() >= 3, "tail bound needs at least three terms");
    let s = a.len() as f64;
    let root_prod: f64 = a.iter().map(|v| v.sqrt()).product();
    let limit = ((2.0 / s) / (root_prod * 1e-8)).powf(2.0 / s);
    let integrand = |t: f64| {
        if t == 0.0 {
            return 0.5 * (a.iter().sum::<f64>() - u);
        }
        let theta = 0.5 * a.iter().map(|ai| (ai * t).atan()).sum::<f64>() - 0.5 * u * t;
        let rho: f64 = a.iter().map(|ai| (1.0 + ai * ai * t * t).powf(0.25)).product();
        theta.sin() / (t * rho)
    };
    let rule = gauss_legendre(20);
    let a_max = a.iter().cloned().fold(0.0, f64::max);
    // Panels grow geometrically past 1/a_max, capped by the oscillation period 4π/u.
    let cap = (1.0f64).min(2.0 / u.max(1e-3));
    let mut total = 0.0;
    let mut t = 0.0;
    while t < limit {
        let width = cap.min(0.25 * t.max(1.0 / a_max)).min(limit - t);
        total += composite(&integrand, t, t + width, 1, &rule);
        t += width;
    }
    0.5 - total / PI
}

/// Monte Carlo estimates of `P(Σ aᵢ Zᵢ² < u)` for several `u` at once,
/// with binomial standard errors.
pub fn mc_cdf(a: &[f64], us: &[f64], draws: u64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0u64; us.len()];
    for _ in 0..draws {
        let q: f64 = a
            .iter()
            .map(|ai| {
                let z: f64 = StandardNormal.sample(&mut rng);
                ai * z * z
            })
            .sum();
        for (h, u) in hits.iter_mut().zip(us) {
            if q < *u {
                *h += 1;
            }
        }
    }
    hits.iter()
        .map(|h| {
            let p = *h as f64 / draws as f64;
            (p, (p * (1.0 - p) / draws as f64).sqrt())
        })
        .collect()
}

/// Mixture weights from the literal power-sum recursion, `O(K²)`.
///
/// `a` must already be normalized so that its smallest entry is 1.
pub fn literal_weights(a: &[f64], k: usize) -> Vec<f64> {
    let c: Vec<f64> = a[1..].iter().map(|ai| 1.0 - 1.0 / ai).collect();
    let m: Vec<f64> = (0..=k).map(|j| 0.5 * c.iter().map(|ci| ci.powi(j as i32)).sum::<f64>()).collect();
    let mut p = vec![a[1..].iter().map(|ai| ai.powf(-0.5)).product::<f64>()];
    for j in 1..=k {
        let s: f64 = (0..j).map(|i| m[j - i] * p[i]).sum();
        p.push(s / j as f64);
    }
    p
}

/// `p₀·C(2j,j)(c₂/4)ʲ` for `j = 0..=k`, with `p₀ = (1 − c₂)^{1/2}`.
pub fn two_term_closed_form(c2: f64, k: usize) -> Vec<f64> {
    let mut p = vec![(1.0 - c2).sqrt()];
    for j in 0..k {
        let next = p[j] * (2 * j + 1) as f64 * (2 * j + 2) as f64 / ((j + 1) as f64 * (j + 1) as f64) * c2 / 4.0;
        p.push(next);
    }
    p
}

/// Root of an increasing function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal density, written out.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `χ²₁` density, written out.
pub fn g1(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-0.5 * y).exp() / (2.0 * PI * y).sqrt()
    }
}

/// `∫₀ᵇ f(y) g₁(y) dy` with `y = b sin²θ`, composite Gauss–Legendre in `θ`.
pub fn chi1_integral(f: impl Fn(f64) -> f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let front = (2.0 * b / PI).sqrt();
    composite(
        |th| {
            let y = b * th.sin().powi(2);
            front * th.cos() * (-0.5 * y).exp() * f(y)
        },
        0.0,
        0.5 * PI,
        panels,
        &rule,
    )
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
