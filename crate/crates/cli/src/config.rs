//! JSON config schemas for the pricing recipes. Every config carries a
//! `schema_version` and rejects unknown keys, so stale or misspelled files
//! fail loudly instead of running with defaults.

use std::fs;
use std::path::Path;

use anyhow::Context;
use eqprice_core::affine::AffineModel;
use eqprice_core::equilibrium::PayoffKind;
use eqprice_core::heston::HestonParams;
use eqprice_core::oujump::OuJumpParams;
use eqprice_core::Error;
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}

pub fn check_version(version: u32) -> anyhow::Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "schema_version {version} not supported; this build reads version {SCHEMA_VERSION}"
        ))
        .into());
    }
    Ok(())
}

/// Factor model selector shared by the smile and oracle configs.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Heston { params: HestonParams },
    Oujump { params: OuJumpParams },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Heston { .. } => "heston",
            ModelSpec::Oujump { .. } => "oujump",
        }
    }

    pub fn model(&self) -> &dyn AffineModel {
        match self {
            ModelSpec::Heston { params } => params,
            ModelSpec::Oujump { params } => params,
        }
    }

    /// Initial state as the pricing-time state vector.
    pub fn default_state(&self) -> Vec<f64> {
        match self {
            ModelSpec::Heston { params } => vec![params.v0, params.x0],
            ModelSpec::Oujump { params } => vec![params.x0],
        }
    }
}

/// Transform pricing under the square-root variance model.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceHestonConfig {
    pub schema_version: u32,
    pub params: HestonParams,
    pub horizon: f64,
    /// Pricing-time state `[v, x]`; defaults to `[v0, x0]`.
    #[serde(default)]
    pub state: Option<Vec<f64>>,
    pub securities: Vec<PayoffKind>,
    pub gamma_tilde: Vec<f64>,
}

/// Transform pricing under the mean-reverting jump model.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceOujumpConfig {
    pub schema_version: u32,
    pub params: OuJumpParams,
    pub horizon: f64,
    /// Pricing-time state `[x]`; defaults to `[x0]`.
    #[serde(default)]
    pub state: Option<Vec<f64>>,
    pub securities: Vec<PayoffKind>,
    pub gamma_tilde: Vec<f64>,
}

/// Strike grid in standard-deviation units around the terminal mean.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo_sd: f64,
    pub hi_sd: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lo_sd: -4.5, hi_sd: 1.25, count: 15 }
    }
}

/// Implied-vol smile sweep over risk aversion.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmileConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub horizon: f64,
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub grid: GridSpec,
}

/// One signal observation to price at.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePoint {
    pub t: f64,
    pub xi: f64,
}

/// Defaultable bond: two-point factor on {0, 1}, one linear security.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoBondConfig {
    pub schema_version: u32,
    /// Prior probability of full repayment (factor = 1).
    pub repay_prob: f64,
    pub info_rate: f64,
    pub horizon: f64,
    pub gamma_tilde: f64,
    pub states: Vec<StatePoint>,
}

/// Exponential-prior factor, one linear security.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoExponentialConfig {
    pub schema_version: u32,
    pub mean: f64,
    pub info_rate: f64,
    pub horizon: f64,
    pub gamma_tilde: f64,
    pub states: Vec<StatePoint>,
}

/// Monte Carlo cross-check of the transform prices.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub horizon: f64,
    pub securities: Vec<PayoffKind>,
    pub gamma_tilde: Vec<f64>,
    pub n_paths: usize,
    /// Euler steps for the variance path; ignored by the jump model, which
    /// simulates exactly. Defaults to 100 per unit horizon, floored at 100.
    #[serde(default)]
    pub n_steps: Option<usize>,
    pub seed: u64,
}

impl OracleConfig {
    pub fn steps(&self) -> usize {
        self.n_steps.unwrap_or(((100.0 * self.horizon).ceil() as usize).max(100))
    }
}
