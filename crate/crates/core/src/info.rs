//! Equilibrium prices for factors revealed through bridge-noised signals.
//!
//! Each factor `X_i` is drawn at time 0 and revealed at the horizon `T`;
//! until then the market observes the information process
//! `xi_i(t) = sigma_i X_i t + beta_i(t)` with an independent Brownian bridge
//! `beta_i` vanishing at both ends. Conditional on the signal path, the
//! factor density is an explicit exponential reweighting of the prior, so
//! equilibrium prices (tilted-expectation ratios, as everywhere in this
//! crate) reduce to one-dimensional integrals per factor, or a small tensor
//! grid when a security couples factors.
//!
//! Everything here is exact filtering: no Euler discretization enters except
//! where a caller supplies a discrete signal path to difference.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::stream_rng;
use crate::smile::norm_cdf;

/// Points in an auto-built posterior grid.
const GRID_POINTS: usize = 4001;
/// Log-density drop defining the grid span; `e^{-80}` of peak mass is far
/// outside the mandated eight posterior standard deviations.
const GRID_LOG_DROP: f64 = 80.0;
/// Relative band around the horizon inside which pricing is refused.
const DEGENERATE_BAND: f64 = 1e-9;

/// Prior law of one factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Prior {
    /// Finitely many values with probabilities summing to one.
    Discrete { points: Vec<f64>, probs: Vec<f64> },
    /// Density `e^{-x/mean}/mean` on `x >= 0`.
    Exponential { mean: f64 },
    /// Density values on strictly increasing abscissae, trapezoid-normalized.
    Grid { points: Vec<f64>, values: Vec<f64> },
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::Discrete { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(Error::InvalidParameter(format!(
                        "discrete prior needs matching nonempty points/probs, got {}/{}",
                        points.len(),
                        probs.len()
                    )));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::InvalidParameter("negative prior probability".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidParameter(format!(
                        "discrete prior probabilities sum to {total}, not 1"
                    )));
                }
            }
            Prior::Exponential { mean } => {
                if !(*mean > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "exponential prior mean {mean} must be positive"
                    )));
                }
            }
            Prior::Grid { points, values } => {
                if points.len() < 2 || points.len() != values.len() {
                    return Err(Error::InvalidGrid(format!(
                        "grid prior needs >= 2 matching points/values, got {}/{}",
                        points.len(),
                        values.len()
                    )));
                }
                if points.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidGrid("prior abscissae must increase".into()));
                }
                if values.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::InvalidGrid("negative prior density".into()));
                }
                let total = trapezoid(points, values);
                if (total - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidGrid(format!(
                        "grid prior integrates to {total}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draw one factor value.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Prior::Discrete { points, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    acc += p;
                    if u <= acc {
                        return *x;
                    }
                }
                *points.last().unwrap()
            }
            Prior::Exponential { mean } => Exp::new(1.0 / mean).unwrap().sample(rng),
            Prior::Grid { points, values } => {
                // inverse CDF through the trapezoid cumulative
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for w in 0..points.len() - 1 {
                    let seg = 0.5 * (values[w] + values[w + 1]) * (points[w + 1] - points[w]);
                    if acc + seg >= u || w == points.len() - 2 {
                        let frac = if seg > 0.0 { ((u - acc) / seg).clamp(0.0, 1.0) } else { 0.5 };
                        return points[w] + frac * (points[w + 1] - points[w]);
                    }
                    acc += seg;
                }
                unreachable!()
            }
        }
    }
}

/// One revealed factor: its prior and the rate at which the signal exposes it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub prior: Prior,
    pub info_rate: f64,
}

/// Security payoffs on the terminal factor vector.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfoPayoff {
    Linear { factor: usize },
    Call { factor: usize, strike: f64 },
    /// `(sum_i weights[i] x_i - strike)^+`; the only payoff coupling factors.
    BasketCall { weights: Vec<f64>, strike: f64 },
}

impl InfoPayoff {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InfoPayoff::Linear { factor } => x[*factor],
            InfoPayoff::Call { factor, strike } => (x[*factor] - strike).max(0.0),
            InfoPayoff::BasketCall { weights, strike } => {
                (weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() - strike).max(0.0)
            }
        }
    }

    fn single_factor(&self) -> Option<usize> {
        match self {
            InfoPayoff::Linear { factor } | InfoPayoff::Call { factor, .. } => Some(*factor),
            InfoPayoff::BasketCall { .. } => None,
        }
    }
}

/// A market on revealed factors: the securities, their aggregate tilts, and
/// the common revelation horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoMarket {
    pub horizon: f64,
    pub factors: Vec<Factor>,
    pub securities: Vec<InfoPayoff>,
    pub gamma_tilde: Vec<f64>,
}

/// Signal levels at one instant.
#[derive(Debug, Clone, Serialize)]
pub struct InfoState {
    pub t: f64,
    pub xi: Vec<f64>,
}

impl InfoMarket {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if self.factors.is_empty() {
            return Err(Error::InvalidParameter("market needs at least one factor".into()));
        }
        for f in &self.factors {
            f.prior.validate()?;
            if !(f.info_rate > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "information rate {} must be positive",
                    f.info_rate
                )));
            }
        }
        if self.securities.len() != self.gamma_tilde.len() {
            return Err(Error::InvalidParameter(format!(
                "{} securities vs {} tilts",
                self.securities.len(),
                self.gamma_tilde.len()
            )));
        }
        for sec in &self.securities {
            match sec {
                InfoPayoff::Linear { factor } | InfoPayoff::Call { factor, .. } => {
                    if *factor >= self.factors.len() {
                        return Err(Error::InvalidParameter(format!(
                            "payoff references factor {factor} of {}",
                            self.factors.len()
                        )));
                    }
                }
                InfoPayoff::BasketCall { weights, .. } => {
                    if weights.len() != self.factors.len() {
                        return Err(Error::InvalidParameter(format!(
                            "basket weights length {} != factor count {}",
                            weights.len(),
                            self.factors.len()
                        )));
                    }
                }
            }
        }
        // upper-tail integrability of z * prior per unbounded factor: the
        // asymptotic slope of the tilt exponent along +x_i must beat the
        // prior's exponential rate
        for (i, f) in self.factors.iter().enumerate() {
            if let Prior::Exponential { mean } = f.prior {
                let slope = self.tilt_slope_at_plus_infinity(i);
                if !(slope + 1.0 / mean > 0.0) {
                    return Err(Error::IntegrabilityViolation(format!(
                        "factor {i}: tilt slope {slope} + prior rate {} not positive",
                        1.0 / mean
                    )));
                }
            }
        }
        Ok(())
    }

    fn tilt_slope_at_plus_infinity(&self, i: usize) -> f64 {
        let mut slope = 0.0;
        for (sec, z) in self.securities.iter().zip(&self.gamma_tilde) {
            match sec {
                InfoPayoff::Linear { factor } if *factor == i => slope += z,
                InfoPayoff::Call { factor, .. } if *factor == i => slope += z,
                InfoPayoff::BasketCall { weights, .. } if weights[i] > 0.0 => {
                    slope += z * weights[i]
                }
                _ => {}
            }
        }
        slope
    }

    /// Reject times at or beyond the degenerate band around the horizon.
    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        if t >= self.horizon * (1.0 - DEGENERATE_BAND) {
            return Err(Error::DegenerateTime { t, horizon: self.horizon });
        }
        Ok(())
    }
}

fn trapezoid(points: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in 0..points.len() - 1 {
        acc += 0.5 * (values[w] + values[w + 1]) * (points[w + 1] - points[w]);
    }
    acc
}

/// Composite Simpson when the abscissae are uniform with an odd count (the
/// auto-built posterior grids), else trapezoid; the Simpson upgrade removes
/// the boundary-term error at the support edge.
fn integrate(points: &[f64], values: &[f64]) -> f64 {
    let n = points.len();
    if n < 3 || n % 2 == 0 {
        return trapezoid(points, values);
    }
    let dx = points[1] - points[0];
    let uniform = points
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-12 * dx.abs().max(1.0));
    if !uniform {
        return trapezoid(points, values);
    }
    let mut acc = values[0] + values[n - 1];
    for (j, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * dx / 3.0
}

/// Conditional factor law given the signal level, normalized.
#[derive(Debug, Clone)]
pub enum FactorPosterior {
    Weights { points: Vec<f64>, probs: Vec<f64> },
    Density { points: Vec<f64>, values: Vec<f64> },
}

impl FactorPosterior {
    /// `E[f(X)]` under the posterior.
    pub fn expectation(&self, f: &dyn Fn(f64) -> f64) -> f64 {
        match self {
            FactorPosterior::Weights { points, probs } => {
                points.iter().zip(probs).map(|(x, p)| p * f(*x)).sum()
            }
            FactorPosterior::Density { points, values } => {
                let fv: Vec<f64> = points.iter().zip(values).map(|(x, v)| v * f(*x)).collect();
                integrate(points, &fv)
            }
        }
    }

    pub fn moments(&self) -> (f64, f64) {
        let mean = self.expectation(&|x| x);
        let var = self.expectation(&|x| (x - mean) * (x - mean));
        (mean, var.max(0.0))
    }

    /// Deviation of the raw normalization from one (it is renormalized away,
    /// but the defect measures grid adequacy).
    pub fn normalization(&self) -> f64 {
        match self {
            FactorPosterior::Weights { probs, .. } => probs.iter().sum(),
            FactorPosterior::Density { points, values } => integrate(points, values),
        }
    }

    fn nodes_and_masses(&self, max_nodes: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            FactorPosterior::Weights { points, probs } => (points.clone(), probs.clone()),
            FactorPosterior::Density { points, values } => {
                let n = max_nodes.max(2);
                let lo = points[0];
                let hi = *points.last().unwrap();
                let dx = (hi - lo) / (n - 1) as f64;
                let interp = |x: f64| -> f64 {
                    match points.binary_search_by(|p| p.total_cmp(&x)) {
                        Ok(j) => values[j],
                        Err(0) => values[0],
                        Err(j) if j == points.len() => *values.last().unwrap(),
                        Err(j) => {
                            let w = (x - points[j - 1]) / (points[j] - points[j - 1]);
                            values[j - 1] * (1.0 - w) + values[j] * w
                        }
                    }
                };
                let pts: Vec<f64> = (0..n).map(|i| lo + i as f64 * dx).collect();
                let mut masses: Vec<f64> =
                    pts.iter().map(|x| interp(*x) * dx).collect();
                masses[0] *= 0.5;
                masses[n - 1] *= 0.5;
                let total: f64 = masses.iter().sum();
                for m in &mut masses {
                    *m /= total;
                }
                (pts, masses)
            }
        }
    }
}

/// Log-likelihood exponent of the signal level against the factor value:
/// `(T/(T-t)) (sigma x xi - (sigma x)^2 t / 2)`.
fn signal_exponent(sigma: f64, horizon: f64, t: f64, xi: f64, x: f64) -> f64 {
    horizon / (horizon - t) * (sigma * x * xi - 0.5 * sigma * sigma * x * x * t)
}

/// Posterior law of factor `i` given its signal level at `state.t`.
pub fn conditional_density(market: &InfoMarket, i: usize, state: &InfoState) -> Result<FactorPosterior> {
    market.check_time(state.t)?;
    if i >= market.factors.len() || state.xi.len() != market.factors.len() {
        return Err(Error::InvalidParameter(format!(
            "factor index {i} / signal length {} vs {} factors",
            state.xi.len(),
            market.factors.len()
        )));
    }
    let f = &market.factors[i];
    let sigma = f.info_rate;
    let (t, xi) = (state.t, state.xi[i]);
    let ll = |x: f64| signal_exponent(sigma, market.horizon, t, xi, x);

    match &f.prior {
        Prior::Discrete { points, probs } => {
            let logs: Vec<f64> = points
                .iter()
                .zip(probs)
                .map(|(x, p)| if *p > 0.0 { p.ln() + ll(*x) } else { f64::NEG_INFINITY })
                .collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
            let total: f64 = w.iter().sum();
            for p in &mut w {
                *p /= total;
            }
            Ok(FactorPosterior::Weights { points: points.clone(), probs: w })
        }
        Prior::Grid { points, values } => {
            let logs: Vec<f64> = points.iter().map(|x| ll(*x)).collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut dens: Vec<f64> =
                values.iter().zip(&logs).map(|(v, l)| v * (l - m).exp()).collect();
            let total = integrate(points, &dens);
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::IntegrabilityViolation(format!(
                    "posterior mass {total} on the supplied grid"
                )));
            }
            for v in &mut dens {
                *v /= total;
            }
            Ok(FactorPosterior::Density { points: points.clone(), values: dens })
        }
        Prior::Exponential { mean } => {
            // posterior density on x >= 0 is exp(-a x^2/2 + b x) up to scale
            let a = sigma * sigma * t * market.horizon / (market.horizon - t);
            let b = sigma * market.horizon * xi / (market.horizon - t) - 1.0 / mean;
            let (lo, hi) = gaussian_support(a, b, *mean)?;
            let dx = (hi - lo) / (GRID_POINTS - 1) as f64;
            let expo = |x: f64| -0.5 * a * x * x + b * x;
            let peak = expo(if a > 0.0 { (b / a).clamp(lo, hi) } else { lo });
            let points: Vec<f64> = (0..GRID_POINTS).map(|j| lo + j as f64 * dx).collect();
            let mut dens: Vec<f64> = points.iter().map(|x| (expo(*x) - peak).exp()).collect();
            let total = integrate(&points, &dens);
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::IntegrabilityViolation(format!(
                    "posterior mass {total} on the built grid"
                )));
            }
            for v in &mut dens {
                *v /= total;
            }
            Ok(FactorPosterior::Density { points, values: dens })
        }
    }
}

/// Support of `exp(-a x^2/2 + b x)` on `x >= 0` out to a fixed log-density
/// drop on both sides of the mode.
fn gaussian_support(a: f64, b: f64, scale_hint: f64) -> Result<(f64, f64)> {
    let mode = if a > 0.0 { (b / a).max(0.0) } else { 0.0 };
    let expo = |x: f64| -0.5 * a * x * x + b * x;
    let peak = expo(mode);
    let mut step = scale_hint.max(mode * 1e-3);
    let mut hi = mode + step;
    for _ in 0..200 {
        if peak - expo(hi) >= GRID_LOG_DROP {
            break;
        }
        step *= 2.0;
        hi = mode + step;
    }
    if peak - expo(hi) < GRID_LOG_DROP {
        return Err(Error::IntegrabilityViolation(format!(
            "tilted posterior does not decay along the factor axis (a = {a}, b = {b})"
        )));
    }
    // refine hi back toward the drop point to keep the grid tight
    let (mut l, mut r) = (mode, hi);
    for _ in 0..60 {
        let mid = 0.5 * (l + r);
        if peak - expo(mid) >= GRID_LOG_DROP {
            r = mid;
        } else {
            l = mid;
        }
    }
    hi = r;
    let lo = if mode == 0.0 {
        0.0
    } else {
        let (mut l, mut r) = (0.0_f64, mode);
        if peak - expo(0.0) < GRID_LOG_DROP {
            0.0
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (l + r);
                if peak - expo(mid) >= GRID_LOG_DROP {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            l
        }
    };
    Ok((lo, hi))
}

/// Shared evaluation core: posterior per factor, then tilted-ratio prices.
fn tilted_prices(market: &InfoMarket, state: &InfoState) -> Result<Vec<f64>> {
    let n = market.factors.len();
    let posteriors: Vec<FactorPosterior> = (0..n)
        .map(|i| conditional_density(market, i, state))
        .collect::<Result<_>>()?;

    let coupled_tilt = market
        .securities
        .iter()
        .zip(&market.gamma_tilde)
        .any(|(s, z)| s.single_factor().is_none() && *z != 0.0);

    let mut out = vec![0.0; market.securities.len()];
    if !coupled_tilt {
        // the weight factorizes across factors; single-factor securities
        // price through one-dimensional integrals
        let mut per_factor: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut coupled: Vec<usize> = Vec::new();
        for (k, sec) in market.securities.iter().enumerate() {
            match sec.single_factor() {
                Some(i) => per_factor[i].push(k),
                None => coupled.push(k),
            }
        }
        for i in 0..n {
            let tilt = |x: f64| -> f64 {
                let mut e = 0.0;
                for (sec, z) in market.securities.iter().zip(&market.gamma_tilde) {
                    match sec {
                        InfoPayoff::Linear { factor } if *factor == i => e += z * x,
                        InfoPayoff::Call { factor, strike } if *factor == i => {
                            e += z * (x - strike).max(0.0)
                        }
                        _ => {}
                    }
                }
                e
            };
            let den = posteriors[i].expectation(&|x| (-tilt(x)).exp());
            if !(den > 0.0) || !den.is_finite() {
                return Err(Error::IntegrabilityViolation(format!(
                    "tilted normalizer {den} for factor {i}"
                )));
            }
            for &k in &per_factor[i] {
                let sec = &market.securities[k];
                let num = posteriors[i].expectation(&|x| {
                    let full = vec_with(n, i, x);
                    sec.eval(&full) * (-tilt(x)).exp()
                });
                out[k] = num / den;
            }
        }
        if !coupled.is_empty() {
            // payoffs couple factors but the weight does not: numerators need
            // the tensor grid, the denominator is the product of the 1-d ones
            let tensor = tensor_prices(market, &posteriors, &coupled)?;
            for (k, v) in coupled.iter().zip(tensor) {
                out[*k] = v;
            }
        }
    } else {
        let all: Vec<usize> = (0..market.securities.len()).collect();
        let tensor = tensor_prices(market, &posteriors, &all)?;
        for (k, v) in all.iter().zip(tensor) {
            out[*k] = v;
        }
    }
    Ok(out)
}

fn vec_with(n: usize, i: usize, x: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = x;
    v
}

/// Tensor-grid ratio over up to three factors.
fn tensor_prices(
    market: &InfoMarket,
    posteriors: &[FactorPosterior],
    which: &[usize],
) -> Result<Vec<f64>> {
    let n = market.factors.len();
    if n > 3 {
        return Err(Error::UnsupportedMarket(format!(
            "tensor pricing supports at most 3 factors, market has {n}"
        )));
    }
    let nodes_per = match n {
        1 => 4001,
        2 => 801,
        _ => 201,
    };
    let grids: Vec<(Vec<f64>, Vec<f64>)> =
        posteriors.iter().map(|p| p.nodes_and_masses(nodes_per)).collect();

    let weight_exponent = |x: &[f64]| -> f64 {
        market
            .securities
            .iter()
            .zip(&market.gamma_tilde)
            .map(|(s, z)| z * s.eval(x))
            .sum()
    };

    let mut den = 0.0;
    let mut nums = vec![0.0; which.len()];
    let dims: Vec<usize> = grids.iter().map(|g| g.0.len()).collect();
    let total: usize = dims.iter().product();
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        let mut mass = 1.0;
        for (d, g) in grids.iter().enumerate() {
            let j = rem % dims[d];
            rem /= dims[d];
            x[d] = g.0[j];
            mass *= g.1[j];
        }
        let zw = mass * (-weight_exponent(&x)).exp();
        den += zw;
        for (slot, &k) in nums.iter_mut().zip(which) {
            *slot += zw * market.securities[k].eval(&x);
        }
    }
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::IntegrabilityViolation(format!(
            "tensor normalizer {den}"
        )));
    }
    Ok(nums.into_iter().map(|v| v / den).collect())
}

/// Equilibrium price of every security given the current signals.
pub fn price(market: &InfoMarket, state: &InfoState) -> Result<Vec<f64>> {
    market.validate()?;
    tilted_prices(market, state)
}

/// Two-point credit bond: prior on `{0, 1}`, single linear security. Works
/// entirely in log-space, so extreme signals saturate instead of overflowing.
pub fn binary_bond_price(market: &InfoMarket, state: &InfoState) -> Result<f64> {
    market.validate()?;
    market.check_time(state.t)?;
    let (p1, sigma) = match (&market.factors[..], &market.securities[..]) {
        ([f], [InfoPayoff::Linear { factor: 0 }]) => match &f.prior {
            Prior::Discrete { points, probs }
                if points.len() == 2 && points[0] == 0.0 && points[1] == 1.0 =>
            {
                (probs[1], f.info_rate)
            }
            _ => {
                return Err(Error::UnsupportedMarket(
                    "binary bond needs a two-point prior on {0, 1}".into(),
                ))
            }
        },
        _ => {
            return Err(Error::UnsupportedMarket(
                "binary bond needs one factor and one linear security".into(),
            ))
        }
    };
    let gamma = market.gamma_tilde[0];
    // S = sigmoid(log(p1/p0) + ll(1) - gamma); ll(0) = 0
    let u = (p1 / (1.0 - p1)).ln()
        + signal_exponent(sigma, market.horizon, state.t, state.xi[0], 1.0)
        - gamma;
    Ok(if u >= 0.0 { 1.0 / (1.0 + (-u).exp()) } else { u.exp() / (1.0 + u.exp()) })
}

/// Hazard `phi(c) / Phi(c)` of the standard normal, stable for any `c`.
pub(crate) fn normal_hazard(c: f64) -> f64 {
    if c > -30.0 {
        let pdf = (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
        pdf / norm_cdf(c)
    } else {
        // asymptotic expansion of the Mills ratio for deep negative c
        let c2 = 1.0 / (c * c);
        -c * (1.0 + c2 * (1.0 - c2 * (2.0 - c2 * (10.0 - c2 * 74.0))))
    }
}

/// Exponential-prior bond price in closed form: the tilted posterior is a
/// Gaussian truncated to `x >= 0` with curvature `A = sigma^2 t T/(T-t)` and
/// slope `B = sigma T xi/(T-t) - (gamma mean + 1)/mean`, whose mean is
/// `B/A + hazard(B/sqrt(A))/sqrt(A)`.
pub fn exponential_price(market: &InfoMarket, state: &InfoState) -> Result<f64> {
    market.validate()?;
    market.check_time(state.t)?;
    let (mean, sigma) = match (&market.factors[..], &market.securities[..]) {
        ([f], [InfoPayoff::Linear { factor: 0 }]) => match &f.prior {
            Prior::Exponential { mean } => (*mean, f.info_rate),
            _ => {
                return Err(Error::UnsupportedMarket(
                    "closed form needs an exponential prior".into(),
                ))
            }
        },
        _ => {
            return Err(Error::UnsupportedMarket(
                "closed form needs one factor and one linear security".into(),
            ))
        }
    };
    let t = state.t;
    if t <= 0.0 {
        // A = 0: the truncated-Gaussian form is singular; the tilted prior
        // mean mean/(gamma mean + 1) is the correct limit but callers must
        // request it through the generic price()
        return Err(Error::DegenerateTime { t, horizon: market.horizon });
    }
    let gamma = market.gamma_tilde[0];
    let a = sigma * sigma * t * market.horizon / (market.horizon - t);
    let b = sigma * market.horizon * state.xi[0] / (market.horizon - t)
        - (gamma * mean + 1.0) / mean;
    let c = b / a.sqrt();
    if c <= -30.0 {
        // direct form cancels catastrophically; same expansion as the hazard
        let c2 = 1.0 / (c * c);
        Ok(-1.0 / b * (1.0 - c2 * (2.0 - c2 * (10.0 - c2 * (74.0 - c2 * 706.0)))))
    } else {
        Ok(b / a + normal_hazard(c) / a.sqrt())
    }
}

/// Reweight a prior by `exp(-gamma x)` and renormalize.
pub fn tilted_density(prior: &Prior, gamma: f64) -> Result<Prior> {
    prior.validate()?;
    match prior {
        Prior::Discrete { points, probs } => {
            let logs: Vec<f64> = points
                .iter()
                .zip(probs)
                .map(|(x, p)| if *p > 0.0 { p.ln() - gamma * x } else { f64::NEG_INFINITY })
                .collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
            let total: f64 = w.iter().sum();
            for p in &mut w {
                *p /= total;
            }
            Ok(Prior::Discrete { points: points.clone(), probs: w })
        }
        Prior::Exponential { mean } => {
            if !(gamma + 1.0 / mean > 0.0) {
                return Err(Error::IntegrabilityViolation(format!(
                    "tilt {gamma} + rate {} not positive",
                    1.0 / mean
                )));
            }
            Ok(Prior::Exponential { mean: mean / (gamma * mean + 1.0) })
        }
        Prior::Grid { points, values } => {
            let mut v: Vec<f64> =
                points.iter().zip(values).map(|(x, d)| d * (-gamma * x).exp()).collect();
            let total = integrate(points, &v);
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::IntegrabilityViolation(format!(
                    "tilted grid mass {total}"
                )));
            }
            for d in &mut v {
                *d /= total;
            }
            Ok(Prior::Grid { points: points.clone(), values: v })
        }
    }
}

/// Exact sampling of the signal path at the supplied times, given the true
/// factor values. Transitions use the conditional Gaussian law of the bridge
/// (never the singular drift form): from `xi_s` to time `t`,
/// mean `sigma x t + (xi_s - sigma x s)(T-t)/(T-s)`, variance
/// `(t-s)(T-t)/(T-s)`.
pub fn simulate_information_path(
    market: &InfoMarket,
    true_factors: &[f64],
    times: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<InfoState>> {
    let n = market.factors.len();
    if true_factors.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} factor values for {} factors",
            true_factors.len(),
            n
        )));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("times must be increasing and start at >= 0".into()));
    }
    if *times.last().unwrap() >= market.horizon {
        return Err(Error::InvalidGrid(format!(
            "last time {} reaches the horizon {}",
            times.last().unwrap(),
            market.horizon
        )));
    }
    let horizon = market.horizon;
    let mut out = Vec::with_capacity(times.len());
    let mut s = 0.0;
    let mut xi = vec![0.0; n];
    for &t in times {
        if t > s {
            for (i, f) in market.factors.iter().enumerate() {
                let x = true_factors[i];
                let mean = f.info_rate * x * t
                    + (xi[i] - f.info_rate * x * s) * (horizon - t) / (horizon - s);
                let var = (t - s) * (horizon - t) / (horizon - s);
                let z: f64 = rng.sample(StandardNormal);
                xi[i] = mean + var.sqrt() * z;
            }
            s = t;
        }
        out.push(InfoState { t, xi: xi.clone() });
    }
    Ok(out)
}

/// Batch of independent signal paths with per-path seeded streams; factor
/// values are drawn from the priors unless supplied.
pub fn simulate_information_paths(
    market: &InfoMarket,
    true_factors: Option<&[f64]>,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, Vec<InfoState>)>> {
    market.validate()?;
    (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream_rng(seed, p as u64);
            let xs: Vec<f64> = match true_factors {
                Some(v) => v.to_vec(),
                None => market.factors.iter().map(|f| f.prior.sample(&mut rng)).collect(),
            };
            let path = simulate_information_path(market, &xs, times, &mut rng)?;
            Ok((xs, path))
        })
        .collect()
}

/// One step of the reconstructed innovation and the pricing-measure variance.
#[derive(Debug, Clone, Serialize)]
pub struct InnovationStep {
    pub t: f64,
    /// Innovation increment over `[t, t_next)`.
    pub dw: f64,
    /// Variance of the factor under the tilted (pricing) posterior at `t`.
    pub var_q: f64,
    /// Plain filter mean at `t`.
    pub filter_mean: f64,
    /// Equilibrium security price at `t`.
    pub price: f64,
}

/// Difference a sampled signal path into innovation increments and attach the
/// per-step pricing diagnostics. Single-factor, single-security markets only.
pub fn innovation_and_variance(
    market: &InfoMarket,
    times: &[f64],
    xis: &[f64],
) -> Result<Vec<InnovationStep>> {
    market.validate()?;
    if market.factors.len() != 1 || market.securities.len() != 1 {
        return Err(Error::UnsupportedMarket(
            "innovation diagnostics need one factor and one security".into(),
        ));
    }
    if times.len() != xis.len() || times.len() < 2 {
        return Err(Error::InvalidGrid(format!(
            "need matching times/signals of length >= 2, got {}/{}",
            times.len(),
            xis.len()
        )));
    }
    let sigma = market.factors[0].info_rate;
    let horizon = market.horizon;
    let mut out = Vec::with_capacity(times.len() - 1);
    for k in 0..times.len() - 1 {
        let (t, xi) = (times[k], xis[k]);
        market.check_time(t)?;
        let state = InfoState { t, xi: vec![xi] };
        let post = conditional_density(market, 0, &state)?;
        let filter_mean = post.expectation(&|x| x);
        let price = tilted_prices(market, &state)?[0];
        // Q-variance through the tilted posterior
        let tilt = |x: f64| {
            (-market.gamma_tilde[0] * market.securities[0].eval(&[x])).exp()
        };
        let zden = post.expectation(&tilt);
        let qmean = post.expectation(&|x| x * tilt(x)) / zden;
        let qsec = post.expectation(&|x| x * x * tilt(x)) / zden;
        let var_q = (qsec - qmean * qmean).max(0.0);
        let dt = times[k + 1] - t;
        let dw = (xis[k + 1] - xi) - (sigma * horizon * filter_mean - xi) / (horizon - t) * dt;
        out.push(InnovationStep { t, dw, var_q, filter_mean, price });
    }
    Ok(out)
}
