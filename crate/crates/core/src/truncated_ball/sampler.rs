//! Rejection sampler used as an independent Monte Carlo oracle.
//!
//! Accepted draws are produced in fixed-size chunks. Chunk `i` owns ChaCha8
//! stream `i + 1` under the user seed (stream 0 is the acceptance probe), and
//! chunk results are merged in index order, so output does not depend on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::BallTruncation;
use crate::error::{Error, Result};

/// Knobs for the rejection sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerConfig {
    /// Proposals in the acceptance probe.
    pub probe: u64,
    /// Abort when the probe acceptance rate falls below this.
    pub min_acceptance: f64,
    /// Accepted draws per chunk.
    pub chunk: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { probe: 1_000_000, min_acceptance: 1e-6, chunk: 4096 }
    }
}

/// Empirical moments of `Xₙ²` with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub samples: u64,
    pub attempts: u64,
    pub acceptance_rate: f64,
    pub acceptance_se: f64,
    pub second: Vec<f64>,
    pub second_se: Vec<f64>,
    pub var_sq: Vec<f64>,
    pub var_sq_se: Vec<f64>,
    pub cov_sq: Vec<Vec<f64>>,
    pub cov_sq_se: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutput {
    pub draws: Vec<Vec<f64>>,
    pub moments: EmpiricalMoments,
}

/// Raw power sums of the squares, merged in chunk order.
#[derive(Debug, Clone)]
struct PowerSums {
    nu: usize,
    count: u64,
    attempts: u64,
    /// `Σ aⁿ` for powers 1..=4, per coordinate.
    single: Vec<[f64; 4]>,
    /// `Σ ab, Σ a²b, Σ ab², Σ a²b²` over pairs `n < m`.
    pair: Vec<[f64; 4]>,
}

impl PowerSums {
    fn new(nu: usize) -> Self {
        Self { nu, count: 0, attempts: 0, single: vec![[0.0; 4]; nu], pair: vec![[0.0; 4]; nu * (nu - 1) / 2] }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        for (s, xi) in self.single.iter_mut().zip(x) {
            let a = xi * xi;
            let a2 = a * a;
            s[0] += a;
            s[1] += a2;
            s[2] += a2 * a;
            s[3] += a2 * a2;
        }
        let mut k = 0;
        for n in 0..self.nu {
            let a = x[n] * x[n];
            for xm in &x[n + 1..] {
                let b = xm * xm;
                let p = &mut self.pair[k];
                p[0] += a * b;
                p[1] += a * a * b;
                p[2] += a * b * b;
                p[3] += a * a * b * b;
                k += 1;
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.attempts += other.attempts;
        for (s, o) in self.single.iter_mut().zip(&other.single) {
            s.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
        for (s, o) in self.pair.iter_mut().zip(&other.pair) {
            s.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
    }

    fn finish(&self) -> EmpiricalMoments {
        let nu = self.nu;
        let n = self.count as f64;
        let e: Vec<[f64; 4]> = self.single.iter().map(|s| s.map(|v| v / n)).collect();
        let mean: Vec<f64> = e.iter().map(|v| v[0]).collect();
        let mut var = vec![0.0; nu];
        let mut var_se = vec![0.0; nu];
        let mut cov = vec![vec![0.0; nu]; nu];
        let mut cov_se = vec![vec![0.0; nu]; nu];
        for i in 0..nu {
            let (m, [_, e2, e3, e4]) = (mean[i], e[i]);
            let v = e2 - m * m;
            let m4 = e4 - 4.0 * m * e3 + 6.0 * m * m * e2 - 3.0 * m.powi(4);
            var[i] = v;
            var_se[i] = ((m4 - v * v).max(0.0) / n).sqrt();
            cov[i][i] = v;
            cov_se[i][i] = var_se[i];
        }
        let mut k = 0;
        for i in 0..nu {
            for j in i + 1..nu {
                let [ab, a2b, ab2, a2b2] = self.pair[k].map(|v| v / n);
                let (a, b) = (mean[i], mean[j]);
                let c = ab - a * b;
                let m22 = a2b2 - 2.0 * b * a2b - 2.0 * a * ab2 + b * b * e[i][1] + a * a * e[j][1]
                    + 4.0 * a * b * ab
                    - 3.0 * a * a * b * b;
                let se = ((m22 - c * c).max(0.0) / n).sqrt();
                cov[i][j] = c;
                cov[j][i] = c;
                cov_se[i][j] = se;
                cov_se[j][i] = se;
                k += 1;
            }
        }
        let rate = n / self.attempts as f64;
        EmpiricalMoments {
            samples: self.count,
            attempts: self.attempts,
            acceptance_rate: rate,
            acceptance_se: (rate * (1.0 - rate) / self.attempts as f64).sqrt(),
            second_se: var.iter().map(|v| (v.max(0.0) / n).sqrt()).collect(),
            second: mean,
            var_sq: var,
            var_sq_se: var_se,
            cov_sq: cov,
            cov_sq_se: cov_se,
        }
    }
}

struct Proposer {
    sd: Vec<f64>,
    rho: f64,
    rng: ChaCha8Rng,
    buf: Vec<f64>,
}

impl Proposer {
    fn new(bt: &BallTruncation, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            sd: bt.lambda().iter().map(|l| l.sqrt()).collect(),
            rho: bt.rho(),
            rng,
            buf: vec![0.0; bt.nu()],
        }
    }

    /// One proposal; `true` when it lands inside the ball.
    fn propose(&mut self) -> bool {
        let mut r = 0.0;
        for (x, s) in self.buf.iter_mut().zip(&self.sd) {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *x = s * z;
            r += *x * *x;
        }
        r < self.rho
    }

    /// Propose until `count` draws are accepted, feeding each to `sink`.
    fn accept(&mut self, count: usize, mut sink: impl FnMut(&[f64])) -> u64 {
        let mut attempts = 0;
        let mut got = 0;
        while got < count {
            attempts += 1;
            if self.propose() {
                sink(&self.buf);
                got += 1;
            }
        }
        attempts
    }
}

fn probe(bt: &BallTruncation, seed: u64, cfg: &SamplerConfig) -> Result<()> {
    let mut p = Proposer::new(bt, seed, 0);
    let needed = cfg.min_acceptance * cfg.probe as f64;
    let mut accepted = 0u64;
    for _ in 0..cfg.probe {
        if p.propose() {
            accepted += 1;
            if accepted as f64 > needed {
                return Ok(());
            }
        }
    }
    let rate = accepted as f64 / cfg.probe as f64;
    if rate < cfg.min_acceptance {
        return Err(Error::Sampling(format!(
            "acceptance rate {rate:e} over {} proposals is below {:e}; the ball is too small for rejection sampling",
            cfg.probe, cfg.min_acceptance
        )));
    }
    Ok(())
}

fn chunks(n: u64, chunk: usize) -> Vec<(u64, usize)> {
    let c = chunk as u64;
    (0..n.div_ceil(c)).map(|i| (i, (n - i * c).min(c) as usize)).collect()
}

fn validate(n: u64, cfg: &SamplerConfig) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    if cfg.chunk == 0 || cfg.probe == 0 || !(cfg.min_acceptance >= 0.0 && cfg.min_acceptance < 1.0) {
        return Err(Error::Domain(format!("invalid sampler configuration {cfg:?}")));
    }
    Ok(())
}

/// Exactly `n` accepted draws together with their empirical moments.
pub fn sample(bt: &BallTruncation, n: u64, seed: u64, cfg: &SamplerConfig) -> Result<SampleOutput> {
    validate(n, cfg)?;
    probe(bt, seed, cfg)?;
    let parts: Vec<(Vec<Vec<f64>>, PowerSums)> = chunks(n, cfg.chunk)
        .into_par_iter()
        .map(|(i, len)| {
            let mut p = Proposer::new(bt, seed, i + 1);
            let mut sums = PowerSums::new(bt.nu());
            let mut draws = Vec::with_capacity(len);
            sums.attempts = p.accept(len, |x| {
                sums.push(x);
                draws.push(x.to_vec());
            });
            (draws, sums)
        })
        .collect();
    let mut total = PowerSums::new(bt.nu());
    let mut draws = Vec::with_capacity(n as usize);
    for (d, s) in parts {
        total.merge(&s);
        draws.extend(d);
    }
    Ok(SampleOutput { draws, moments: total.finish() })
}

/// Empirical moments of `n` accepted draws without retaining the draws.
pub fn sample_moments(bt: &BallTruncation, n: u64, seed: u64, cfg: &SamplerConfig) -> Result<EmpiricalMoments> {
    validate(n, cfg)?;
    probe(bt, seed, cfg)?;
    let parts: Vec<PowerSums> = chunks(n, cfg.chunk)
        .into_par_iter()
        .map(|(i, len)| {
            let mut p = Proposer::new(bt, seed, i + 1);
            let mut sums = PowerSums::new(bt.nu());
            sums.attempts = p.accept(len, |x| sums.push(x));
            sums
        })
        .collect();
    let mut total = PowerSums::new(bt.nu());
    parts.iter().for_each(|s| total.merge(s));
    Ok(total.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_inside_ball() {
        let bt = BallTruncation::new(&[1.0, 2.0], 1.5).unwrap();
        let out = sample(&bt, 5000, 7, &SamplerConfig::default()).unwrap();
        assert_eq!(out.draws.len(), 5000);
        assert!(out.draws.iter().all(|x| x.iter().map(|v| v * v).sum::<f64>() < 1.5));
    }

    #[test]
    fn chunking_is_invisible_to_streaming_moments() {
        let bt = BallTruncation::new(&[1.0, 3.0, 0.5], 2.0).unwrap();
        let cfg = SamplerConfig { chunk: 100, ..Default::default() };
        let a = sample(&bt, 1234, 3, &cfg).unwrap();
        let b = sample_moments(&bt, 1234, 3, &cfg).unwrap();
        assert_eq!(a.moments, b);
        assert_eq!(a.draws.len(), 1234);
    }

    #[test]
    fn tiny_ball_aborts() {
        let bt = BallTruncation::new(&[1.0; 5], 1e-4).unwrap();
        let cfg = SamplerConfig { probe: 100_000, ..Default::default() };
        assert!(matches!(sample(&bt, 10, 1, &cfg), Err(Error::Sampling(_))));
    }

    #[test]
    fn zero_draws_rejected() {
        let bt = BallTruncation::new(&[1.0], 1.0).unwrap();
        assert!(sample(&bt, 0, 1, &SamplerConfig::default()).is_err());
    }
}
