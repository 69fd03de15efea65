//! Chi-square mixtures and the moments of a diagonal normal truncated to a
//! centered Euclidean ball.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: standard normal and chi-square densities/cdfs.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration.
//! * [`ruben`]: the cdf of `Σ aᵢ χ²₁` as a mixture of central chi-square cdfs.
//! * [`truncated_ball`]: `N(0, diag λ)` restricted to `{x : xᵀx < ρ}`.
//! * [`verify`]: numerical certification of the variance/covariance
//!   inequalities, the MLR lemmas and cdf log-concavity.
//! * [`reconstruct`]: fixed-point recovery of `λ` from truncated second moments.
//! * [`cli`]: the `chimix` command-line front end.
//!
//! Throughout, `ρ` is the *squared* radius of the ball.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod quadrature;
pub mod reconstruct;
pub mod ruben;
pub mod truncated_ball;
pub mod verify;

pub use error::{Error, Result};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

