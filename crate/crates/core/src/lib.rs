//! Equilibrium security and option pricing for affine and information-based
//! factor models.
//!
//! Securities pay functions of terminal factor levels; a finite set of
//! exponential-utility agents trades them, and the equilibrium prices are
//! conditional-expectation ratios under an exponential tilting of the
//! aggregate payoff. This crate evaluates those ratios three independent
//! ways:
//!
//! - closed-form exponents for two affine factor models (square-root
//!   stochastic variance, mean-reverting two-sided jumps) pushed through
//!   damped Fourier quadrature ([`fourier`]),
//! - exact Bayesian filtering for factors revealed through noisy bridge
//!   signals ([`info`]),
//! - a Monte Carlo oracle with ratio-estimator error bars ([`oracle`]).
//!
//! [`figures`] assembles the standard outputs: implied-volatility smiles
//! across risk aversion and model parameters, and defaultable-bond price
//! paths across information rates.

pub mod affine;
pub mod equilibrium;
pub mod error;
pub mod figures;
pub mod fourier;
pub mod heston;
pub mod info;
pub mod oracle;
pub mod oujump;
pub mod smile;

pub use error::{Error, Result};
