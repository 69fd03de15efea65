mod common;

use std::f64::consts::PI;

use chimix::truncated_ball::*;
use proptest::prelude::*;

#[test]
fn marginal_densities_integrate_to_one() {
    let cases: [(&[f64], f64); 4] = [(&[1.0], 2.0), (&[1.0, 3.0], 2.0), (&[1.0, 2.0, 4.0], 6.0), (&[0.5, 1.0, 10.0, 100.0], 30.0)];
    for (lambda, rho) in cases {
        let bt = BallTruncation::new(lambda, rho).unwrap();
        for n in 0..lambda.len() {
            let b = rho / lambda[n];
            let total = common::chi1_integral(
                |y| bt.marginal_density_y(n, y).unwrap() / common::g1(y).max(f64::MIN_POSITIVE),
                b,
                64,
            );
            assert!((total - 1.0).abs() < 1e-8, "lambda={lambda:?} n={n}: {total}");
        }
    }
}

#[test]
fn marginal_matches_integrated_joint_density() {
    let rule = common::gauss_legendre(20);
    // ν = 2: integrate the joint density across the chord.
    let bt = BallTruncation::new(&[1.0, 3.0], 2.5).unwrap();
    for y in [0.1, 0.7, 1.9] {
        let x = (bt.lambda()[0] * y).sqrt();
        let half = (bt.rho() - x * x).sqrt();
        let fx = common::composite(|x2| bt.joint_density(&[x, x2]).unwrap(), -half, half, 8, &rule);
        let psi = fx * bt.lambda()[0].sqrt() / y.sqrt();
        assert!(common::rel_err(bt.marginal_density_y(0, y).unwrap(), psi) < 1e-6);
    }
    // ν = 3: integrate over the disc in polar coordinates.
    let bt = BallTruncation::new(&[2.0, 1.0, 5.0], 4.0).unwrap();
    for y in [0.2, 1.0, 1.8] {
        let x = (bt.lambda()[0] * y).sqrt();
        let r_max = (bt.rho() - x * x).sqrt();
        let fx = common::composite(
            |r| {
                r * common::composite(
                    |phi| bt.joint_density(&[x, r * phi.cos(), r * phi.sin()]).unwrap(),
                    0.0,
                    2.0 * PI,
                    4,
                    &rule,
                )
            },
            0.0,
            r_max,
            8,
            &rule,
        );
        let psi = fx * bt.lambda()[0].sqrt() / y.sqrt();
        assert!(common::rel_err(bt.marginal_density_y(0, y).unwrap(), psi) < 1e-6);
    }
}

#[test]
fn conditional_densities_integrate_to_one() {
    let bt = BallTruncation::new(&[1.0, 2.0, 3.0, 0.5], 5.0).unwrap();
    for (n, m, y_n) in [(0, 1, 1.0), (1, 0, 0.3), (2, 3, 1.5), (3, 2, 9.0)] {
        let b = (bt.rho() - bt.lambda()[n] * y_n) / bt.lambda()[m];
        let total = common::chi1_integral(
            |y| bt.conditional_density(n, m, y_n, y).unwrap() / common::g1(y).max(f64::MIN_POSITIVE),
            b,
            64,
        );
        assert!((total - 1.0).abs() < 1e-8, "({n},{m}) at {y_n}: {total}");
    }
    assert!(bt.conditional_density(0, 1, 5.0, 0.1).is_err());
    assert!(bt.conditional_density(0, 0, 1.0, 0.1).is_err());
}

#[test]
fn conditional_mean_matches_quadrature() {
    let bt = BallTruncation::new(&[1.0, 2.0, 3.0], 4.0).unwrap();
    for y1 in [0.2, 1.0, 3.0] {
        let b = (bt.rho() - y1) / 2.0;
        let oracle = common::chi1_integral(
            |y| y * bt.conditional_density_y2(y1, y).unwrap() / common::g1(y).max(f64::MIN_POSITIVE),
            b,
            64,
        );
        let v = conditional_mean(&bt, 0, 1, y1, 1e-12).unwrap();
        assert!(common::rel_err(v, oracle) < 1e-9, "{v} vs {oracle}");
    }
}

#[test]
fn moments_are_permutation_equivariant() {
    let a = moments(&BallTruncation::new(&[1.0, 2.0, 4.0], 3.0).unwrap(), 1e-11).unwrap();
    let b = moments(&BallTruncation::new(&[4.0, 1.0, 2.0], 3.0).unwrap(), 1e-11).unwrap();
    let perm = [1, 2, 0];
    for i in 0..3 {
        assert!((a.second[i] - b.second[perm[i]]).abs() < 1e-11);
        assert!((a.var_sq[i] - b.var_sq[perm[i]]).abs() < 1e-11);
        for j in 0..3 {
            assert!((a.cov_sq[i][j] - b.cov_sq[perm[i]][perm[j]]).abs() < 1e-11);
        }
    }
}

#[test]
fn sampler_is_deterministic() {
    let bt = BallTruncation::new(&[1.0, 2.0, 3.0], 4.0).unwrap();
    let cfg = SamplerConfig { probe: 10_000, ..Default::default() };
    let a = sample(&bt, 10_000, 7, &cfg).unwrap();
    let b = sample(&bt, 10_000, 7, &cfg).unwrap();
    let c = sample(&bt, 10_000, 8, &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.draws, c.draws);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let d = pool.install(|| sample(&bt, 10_000, 7, &cfg).unwrap());
    assert_eq!(a, d);
}

#[test]
fn acceptance_rate_matches_ball_mass() {
    let bt = BallTruncation::new(&[1.0, 2.0, 3.0], 4.0).unwrap();
    let m = sample_moments(&bt, 200_000, 11, &SamplerConfig::default()).unwrap();
    let mass = 1.0 / bt.normalizer();
    assert!((m.acceptance_rate - mass).abs() < 4.0 * m.acceptance_se, "{} vs {mass}", m.acceptance_rate);
}

#[test]
fn sampler_agrees_with_quadrature() {
    let bt = BallTruncation::new(&[1.0, 2.0, 4.0], 3.0).unwrap();
    let exact = moments(&bt, 1e-10).unwrap();
    let emp = sample_moments(&bt, 1_000_000, 3, &SamplerConfig::default()).unwrap();
    for n in 0..3 {
        assert!((emp.second[n] - exact.second[n]).abs() < 4.0 * emp.second_se[n]);
        assert!((emp.var_sq[n] - exact.var_sq[n]).abs() < 4.0 * emp.var_sq_se[n]);
        for m in n + 1..3 {
            assert!((emp.cov_sq[n][m] - exact.cov_sq[n][m]).abs() < 4.0 * emp.cov_sq_se[n][m]);
        }
    }
}

#[test]
fn ball_too_small_for_sampling() {
    let bt = BallTruncation::new(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1e-4).unwrap();
    let cfg = SamplerConfig { probe: 10_000, ..Default::default() };
    assert!(matches!(sample(&bt, 10, 1, &cfg), Err(chimix::Error::Sampling(_))));
}

#[test]
fn bad_inputs() {
    assert!(BallTruncation::new(&[], 1.0).is_err());
    assert!(BallTruncation::new(&[1.0, -1.0], 1.0).is_err());
    assert!(BallTruncation::new(&[1.0], 0.0).is_err());
    assert!(BallTruncation::new(&[1.0], f64::INFINITY).is_err());
    let bt = BallTruncation::new(&[1.0, 2.0], 1.0).unwrap();
    assert!(bt.joint_density(&[0.0]).is_err());
    assert!(bt.marginal_density_y(2, 0.5).is_err());
    assert!(moments(&bt, 0.0).is_err());
}

fn instance() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-1.0f64..1.0, 1..4), -1.0f64..1.5)
        .prop_map(|(e, r)| (e.into_iter().map(|x| 10f64.powf(x)).collect(), 10f64.powf(r)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncation_shrinks_second_moments((lambda, rho) in instance()) {
        let bt = BallTruncation::new(&lambda, rho).unwrap();
        let r = moments(&bt, 1e-9).unwrap();
        for n in 0..lambda.len() {
            prop_assert!(r.second[n] < lambda[n]);
            prop_assert!(r.second[n] < rho);
            prop_assert!(r.second[n] > 0.0);
            prop_assert!((r.mass[n] - 1.0).abs() < 1e-8);
            prop_assert!(r.var_sq[n] <= 2.0 * r.second[n] * lambda[n] + 1e-9 * lambda[n] * lambda[n]);
        }
        let total: f64 = r.second.iter().sum();
        prop_assert!(total < rho);
    }
}
