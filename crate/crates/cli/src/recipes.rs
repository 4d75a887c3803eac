//! One function per subcommand: load the config, run the pricing routine,
//! write CSV plus a result JSON, and close with a manifest.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use eqprice_core::equilibrium::PayoffKind;
use eqprice_core::figures::{
    bond_paths_by_info_rate, bond_paths_by_risk_aversion, smile_by_jump_size_oujump,
    smile_by_risk_aversion_heston, smile_by_risk_aversion_oujump, smile_by_vol_of_vol_heston,
    BondPathRow, SmileRow, SmileTable,
};
use eqprice_core::fourier::{price_ratio, QuadratureConfig};
use eqprice_core::info::{
    binary_bond_price, conditional_density, exponential_price, price as info_price, Factor,
    InfoMarket, InfoPayoff, InfoState, Prior,
};
use eqprice_core::oracle::{
    ratio_estimates, simulate_heston_terminal, simulate_oujump_terminal, OracleEstimate,
};
use eqprice_core::Error;
use serde::Serialize;

use crate::config::{
    check_version, load, InfoBondConfig, InfoExponentialConfig, ModelSpec, OracleConfig,
    PriceHestonConfig, PriceOujumpConfig, SmileConfig, StatePoint,
};
use crate::output::{sig, Csv, OutDir};

/// Seed for the simulated figure paths when no --seed is given.
const DEFAULT_FIGURE_SEED: u64 = 7;

fn quad_cfg(tol: Option<f64>) -> QuadratureConfig {
    let mut cfg = QuadratureConfig::default();
    if let Some(t) = tol {
        cfg.rel_tol = t;
    }
    cfg
}

fn payoff_cells(k: &PayoffKind) -> (&'static str, String) {
    match k {
        PayoffKind::Linear => ("linear", String::new()),
        PayoffKind::Call { strike } => ("call", sig(*strike)),
    }
}

#[derive(Serialize)]
struct PriceEntry {
    security: PayoffKind,
    price: f64,
}

#[derive(Serialize)]
struct PriceResult {
    recipe: &'static str,
    model: &'static str,
    horizon: f64,
    state: Vec<f64>,
    gamma_tilde: Vec<f64>,
    denominator: f64,
    quad_error: f64,
    prices: Vec<PriceEntry>,
}

/// Common payload of the two transform-pricing subcommands.
struct PriceJob {
    recipe: &'static str,
    model: ModelSpec,
    horizon: f64,
    state: Option<Vec<f64>>,
    securities: Vec<PayoffKind>,
    gamma_tilde: Vec<f64>,
}

fn price_recipe(
    job: PriceJob,
    config: &Path,
    out: &Path,
    tol: Option<f64>,
) -> anyhow::Result<Vec<PathBuf>> {
    let recipe = job.recipe;
    let state = job.state.unwrap_or_else(|| job.model.default_state());
    let cfg = quad_cfg(tol);
    let prices = price_ratio(
        job.model.model(),
        job.horizon,
        &state,
        &job.securities,
        &job.gamma_tilde,
        None,
        &cfg,
    )
    .context("pricing the security list")?;

    let mut csv = Csv::new(&["security", "kind", "strike", "price"]);
    for (i, (sec, price)) in job.securities.iter().zip(&prices.values).enumerate() {
        let (kind, strike) = payoff_cells(sec);
        csv.row(&[i.to_string(), kind.to_string(), strike, sig(*price)]);
    }

    let result = PriceResult {
        recipe,
        model: job.model.name(),
        horizon: job.horizon,
        state,
        gamma_tilde: job.gamma_tilde,
        denominator: prices.denominator,
        quad_error: prices.quad_error,
        prices: job
            .securities
            .into_iter()
            .zip(&prices.values)
            .map(|(security, p)| PriceEntry { security, price: *p })
            .collect(),
    };

    let mut dir = OutDir::create(out)?;
    dir.write_csv(&format!("{recipe}.csv"), csv)?;
    dir.write_json(&format!("{recipe}.json"), &result)?;
    dir.finish(recipe, Some(config), None, None, tol)
}

pub fn run_price_heston(
    config: &Path,
    out: &Path,
    tol: Option<f64>,
) -> anyhow::Result<Vec<PathBuf>> {
    let c: PriceHestonConfig = load(config)?;
    check_version(c.schema_version)?;
    let job = PriceJob {
        recipe: "price-heston",
        model: ModelSpec::Heston { params: c.params },
        horizon: c.horizon,
        state: c.state,
        securities: c.securities,
        gamma_tilde: c.gamma_tilde,
    };
    price_recipe(job, config, out, tol)
}

pub fn run_price_oujump(
    config: &Path,
    out: &Path,
    tol: Option<f64>,
) -> anyhow::Result<Vec<PathBuf>> {
    let c: PriceOujumpConfig = load(config)?;
    check_version(c.schema_version)?;
    let job = PriceJob {
        recipe: "price-oujump",
        model: ModelSpec::Oujump { params: c.params },
        horizon: c.horizon,
        state: c.state,
        securities: c.securities,
        gamma_tilde: c.gamma_tilde,
    };
    price_recipe(job, config, out, tol)
}

fn smile_csv(rows: &[SmileRow]) -> Csv {
    let mut csv =
        Csv::new(&["sweep_value", "spot", "strike", "call_price", "implied_vol", "vol_kind"]);
    for r in rows {
        csv.row(&[
            sig(r.sweep_value),
            sig(r.spot),
            sig(r.strike),
            sig(r.call_price),
            sig(r.implied_vol),
            r.vol_kind.to_string(),
        ]);
    }
    csv
}

#[derive(Serialize)]
struct SmileMeta {
    recipe: String,
    terminal_mean: f64,
    terminal_sd: f64,
    /// Strikes at or below this level count as in the money for every curve.
    itm_cutoff: f64,
    rows: usize,
}

fn write_smile(
    recipe: &str,
    table: &SmileTable,
    config: Option<&Path>,
    out: &Path,
    tol: Option<f64>,
) -> anyhow::Result<Vec<PathBuf>> {
    let meta = SmileMeta {
        recipe: recipe.to_string(),
        terminal_mean: table.terminal_mean,
        terminal_sd: table.terminal_sd,
        itm_cutoff: table.itm_cutoff(),
        rows: table.rows.len(),
    };
    let mut dir = OutDir::create(out)?;
    dir.write_csv(&format!("{recipe}.csv"), smile_csv(&table.rows))?;
    dir.write_json(&format!("{recipe}.json"), &meta)?;
    dir.finish(recipe, config, None, None, tol)
}

pub fn run_smile(config: &Path, out: &Path, tol: Option<f64>) -> anyhow::Result<Vec<PathBuf>> {
    let c: SmileConfig = load(config)?;
    check_version(c.schema_version)?;
    let state = c.model.default_state();
    let (mean, var) = c.model.model().terminal_moments(c.horizon, &state);
    let strikes = eqprice_core::smile::strike_grid(
        mean,
        var,
        c.grid.lo_sd,
        c.grid.hi_sd,
        c.grid.count,
    );
    let cfg = quad_cfg(tol);
    let mut rows = Vec::new();
    for gamma in &c.gammas {
        rows.extend(
            eqprice_core::figures::smile_points(
                c.model.model(),
                c.horizon,
                &state,
                *gamma,
                &strikes,
                *gamma,
                &cfg,
            )
            .with_context(|| format!("smile sweep at gamma {gamma}"))?,
        );
    }
    let table = SmileTable { rows, terminal_mean: mean, terminal_sd: var.sqrt() };
    write_smile("smile", &table, Some(config), out, tol)
}

#[derive(Serialize)]
struct InfoRow {
    t: f64,
    xi: f64,
    filter_mean: f64,
    price: f64,
}

#[derive(Serialize)]
struct InfoBondResult {
    recipe: &'static str,
    repay_prob: f64,
    info_rate: f64,
    horizon: f64,
    gamma_tilde: f64,
    rows: Vec<InfoRow>,
}

pub fn run_info_bond(config: &Path, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let c: InfoBondConfig = load(config)?;
    check_version(c.schema_version)?;
    let market = InfoMarket {
        horizon: c.horizon,
        factors: vec![Factor {
            prior: Prior::Discrete {
                points: vec![0.0, 1.0],
                probs: vec![1.0 - c.repay_prob, c.repay_prob],
            },
            info_rate: c.info_rate,
        }],
        securities: vec![InfoPayoff::Linear { factor: 0 }],
        gamma_tilde: vec![c.gamma_tilde],
    };
    let mut rows = Vec::with_capacity(c.states.len());
    for StatePoint { t, xi } in &c.states {
        let state = InfoState { t: *t, xi: vec![*xi] };
        let filter_mean = conditional_density(&market, 0, &state)?.moments().0;
        let price = binary_bond_price(&market, &state)
            .with_context(|| format!("bond price at t {t}, xi {xi}"))?;
        rows.push(InfoRow { t: *t, xi: *xi, filter_mean, price });
    }

    let mut csv = Csv::new(&["t", "xi", "filter_mean", "price"]);
    for r in &rows {
        csv.row(&[sig(r.t), sig(r.xi), sig(r.filter_mean), sig(r.price)]);
    }
    let result = InfoBondResult {
        recipe: "info-bond",
        repay_prob: c.repay_prob,
        info_rate: c.info_rate,
        horizon: c.horizon,
        gamma_tilde: c.gamma_tilde,
        rows,
    };

    let mut dir = OutDir::create(out)?;
    dir.write_csv("info-bond.csv", csv)?;
    dir.write_json("info-bond.json", &result)?;
    dir.finish("info-bond", Some(config), None, None, None)
}

#[derive(Serialize)]
struct InfoExpRow {
    t: f64,
    xi: f64,
    price: f64,
    quadrature: f64,
}

#[derive(Serialize)]
struct InfoExpResult {
    recipe: &'static str,
    mean: f64,
    info_rate: f64,
    horizon: f64,
    gamma_tilde: f64,
    rows: Vec<InfoExpRow>,
}

pub fn run_info_exponential(config: &Path, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let c: InfoExponentialConfig = load(config)?;
    check_version(c.schema_version)?;
    let market = InfoMarket {
        horizon: c.horizon,
        factors: vec![Factor {
            prior: Prior::Exponential { mean: c.mean },
            info_rate: c.info_rate,
        }],
        securities: vec![InfoPayoff::Linear { factor: 0 }],
        gamma_tilde: vec![c.gamma_tilde],
    };
    let mut rows = Vec::with_capacity(c.states.len());
    for StatePoint { t, xi } in &c.states {
        let state = InfoState { t: *t, xi: vec![*xi] };
        let price = exponential_price(&market, &state)
            .with_context(|| format!("closed form at t {t}, xi {xi}"))?;
        let quadrature = info_price(&market, &state)?[0];
        rows.push(InfoExpRow { t: *t, xi: *xi, price, quadrature });
    }

    let mut csv = Csv::new(&["t", "xi", "price", "quadrature"]);
    for r in &rows {
        csv.row(&[sig(r.t), sig(r.xi), sig(r.price), sig(r.quadrature)]);
    }
    let result = InfoExpResult {
        recipe: "info-exponential",
        mean: c.mean,
        info_rate: c.info_rate,
        horizon: c.horizon,
        gamma_tilde: c.gamma_tilde,
        rows,
    };

    let mut dir = OutDir::create(out)?;
    dir.write_csv("info-exponential.csv", csv)?;
    dir.write_json("info-exponential.json", &result)?;
    dir.finish("info-exponential", Some(config), None, None, None)
}

#[derive(Serialize)]
struct OracleRow {
    security: PayoffKind,
    #[serde(flatten)]
    estimate: OracleEstimate,
}

#[derive(Serialize)]
struct OracleResult {
    recipe: &'static str,
    model: &'static str,
    horizon: f64,
    seed: u64,
    n_paths: usize,
    /// Present only for the Euler-discretized variance model.
    #[serde(skip_serializing_if = "Option::is_none")]
    n_steps: Option<usize>,
    gamma_tilde: Vec<f64>,
    estimates: Vec<OracleRow>,
}

pub fn run_oracle(
    config: &Path,
    out: &Path,
    seed_flag: Option<u64>,
    paths_flag: Option<usize>,
) -> anyhow::Result<Vec<PathBuf>> {
    let c: OracleConfig = load(config)?;
    check_version(c.schema_version)?;
    if c.securities.len() != c.gamma_tilde.len() {
        return Err(Error::Config(format!(
            "{} securities vs {} tilts",
            c.securities.len(),
            c.gamma_tilde.len()
        ))
        .into());
    }
    let seed = seed_flag.unwrap_or(c.seed);
    let n_paths = paths_flag.unwrap_or(c.n_paths);
    let (samples, n_steps) = match &c.model {
        ModelSpec::Heston { params } => {
            let steps = c.steps();
            (simulate_heston_terminal(params, c.horizon, n_paths, steps, seed)?, Some(steps))
        }
        ModelSpec::Oujump { params } => {
            (simulate_oujump_terminal(params, c.horizon, n_paths, seed)?, None)
        }
    };
    let weighting: Vec<(PayoffKind, f64)> =
        c.securities.iter().cloned().zip(c.gamma_tilde.iter().copied()).collect();
    let estimates = ratio_estimates(&samples, &weighting, &c.securities)?;

    let mut csv = Csv::new(&[
        "security",
        "kind",
        "strike",
        "value",
        "std_error",
        "max_weight_share",
        "concentrated",
    ]);
    for (i, (sec, est)) in c.securities.iter().zip(&estimates).enumerate() {
        let (kind, strike) = payoff_cells(sec);
        csv.row(&[
            i.to_string(),
            kind.to_string(),
            strike,
            sig(est.value),
            sig(est.std_error),
            sig(est.max_weight_share),
            est.concentrated.to_string(),
        ]);
    }
    let result = OracleResult {
        recipe: "oracle",
        model: c.model.name(),
        horizon: c.horizon,
        seed,
        n_paths,
        n_steps,
        gamma_tilde: c.gamma_tilde.clone(),
        estimates: c
            .securities
            .iter()
            .cloned()
            .zip(estimates)
            .map(|(security, estimate)| OracleRow { security, estimate })
            .collect(),
    };

    let mut dir = OutDir::create(out)?;
    dir.write_csv("oracle.csv", csv)?;
    dir.write_json("oracle.json", &result)?;
    dir.finish("oracle", Some(config), Some(seed), Some(n_paths), None)
}

/// Bundled recipes with pinned parameters, one per shipped figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    /// Smile sweep over risk aversion, square-root variance model.
    #[value(name = "1")]
    RiskAversionSmile,
    /// Smile sweep over the vol-of-vol, square-root variance model.
    #[value(name = "2")]
    VolOfVolSmile,
    /// Smile sweep over the mean jump size, jump model.
    #[value(name = "3")]
    JumpSizeSmile,
    /// Smile sweep over risk aversion, jump model.
    #[value(name = "3a")]
    JumpRiskAversionSmile,
    /// Defaultable-bond price paths across information rates.
    #[value(name = "4")]
    BondByInfoRate,
    /// Defaultable-bond price paths across risk aversions.
    #[value(name = "5")]
    BondByRiskAversion,
}

impl FigureId {
    fn recipe(self) -> &'static str {
        match self {
            FigureId::RiskAversionSmile => "figure1",
            FigureId::VolOfVolSmile => "figure2",
            FigureId::JumpSizeSmile => "figure3",
            FigureId::JumpRiskAversionSmile => "figure3a",
            FigureId::BondByInfoRate => "figure4",
            FigureId::BondByRiskAversion => "figure5",
        }
    }
}

#[derive(Serialize)]
struct BondMeta {
    recipe: &'static str,
    seed: u64,
    rows: usize,
}

fn write_bond_paths(
    recipe: &'static str,
    rows: &[BondPathRow],
    seed: u64,
    out: &Path,
) -> anyhow::Result<Vec<PathBuf>> {
    let mut csv = Csv::new(&["info_rate", "gamma_tilde", "realized_x", "t", "xi", "price"]);
    for r in rows {
        csv.row(&[
            sig(r.info_rate),
            sig(r.gamma_tilde),
            sig(r.realized_x),
            sig(r.t),
            sig(r.xi),
            sig(r.price),
        ]);
    }
    let meta = BondMeta { recipe, seed, rows: rows.len() };
    let mut dir = OutDir::create(out)?;
    dir.write_csv(&format!("{recipe}.csv"), csv)?;
    dir.write_json(&format!("{recipe}.json"), &meta)?;
    dir.finish(recipe, None, Some(seed), None, None)
}

pub fn run_figure(
    id: FigureId,
    out: &Path,
    seed_flag: Option<u64>,
    tol: Option<f64>,
) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = quad_cfg(tol);
    let recipe = id.recipe();
    match id {
        FigureId::RiskAversionSmile => {
            write_smile(recipe, &smile_by_risk_aversion_heston(&cfg)?, None, out, tol)
        }
        FigureId::VolOfVolSmile => {
            write_smile(recipe, &smile_by_vol_of_vol_heston(&cfg)?, None, out, tol)
        }
        FigureId::JumpSizeSmile => {
            write_smile(recipe, &smile_by_jump_size_oujump(&cfg)?, None, out, tol)
        }
        FigureId::JumpRiskAversionSmile => {
            write_smile(recipe, &smile_by_risk_aversion_oujump(&cfg)?, None, out, tol)
        }
        FigureId::BondByInfoRate => {
            let seed = seed_flag.unwrap_or(DEFAULT_FIGURE_SEED);
            write_bond_paths(recipe, &bond_paths_by_info_rate(seed)?, seed, out)
        }
        FigureId::BondByRiskAversion => {
            let seed = seed_flag.unwrap_or(DEFAULT_FIGURE_SEED);
            write_bond_paths(recipe, &bond_paths_by_risk_aversion(seed)?, seed, out)
        }
    }
}
