//! Implied-volatility extraction from equilibrium call prices.
//!
//! Prices are quoted at a zero discount rate on the terminal factor level,
//! so a call on `X_T` struck at `K` with equilibrium stock price `S` inverts
//! through the usual lognormal formula with spot `S` and no drift. A normal
//! (absolute) quote is available for factors that can cross zero.

use serde::Serialize;

/// Lognormal implied volatility of a call quote, or the reason it does not
/// exist. Prices at or below intrinsic value pin the vol to its lower
/// boundary rather than failing, so smile sweeps stay total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "vol", rename_all = "snake_case")]
pub enum ImpliedVol {
    Vol(f64),
    /// Price at or below intrinsic value: any vol at the bracket floor
    /// reproduces it to tolerance.
    LowerBound,
    /// Price outside the attainable range (above spot, nonpositive inputs,
    /// or no root in the bracket).
    NotInvertible,
}

impl ImpliedVol {
    /// Numeric value with boundary cases collapsed to NaN, for CSV columns.
    pub fn as_f64(&self) -> f64 {
        match self {
            ImpliedVol::Vol(v) => *v,
            _ => f64::NAN,
        }
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Lognormal call value at zero rate: `S N(d1) - K N(d2)`.
pub fn lognormal_call(spot: f64, strike: f64, vol: f64, tau: f64) -> f64 {
    if tau <= 0.0 || vol <= 0.0 {
        return (spot - strike).max(0.0);
    }
    let sd = vol * tau.sqrt();
    let d1 = ((spot / strike).ln() + 0.5 * sd * sd) / sd;
    spot * norm_cdf(d1) - strike * norm_cdf(d1 - sd)
}

/// Normal-model call value at zero rate.
pub fn normal_call(spot: f64, strike: f64, vol: f64, tau: f64) -> f64 {
    if tau <= 0.0 || vol <= 0.0 {
        return (spot - strike).max(0.0);
    }
    let sd = vol * tau.sqrt();
    let d = (spot - strike) / sd;
    (spot - strike) * norm_cdf(d) + sd * norm_pdf(d)
}

const VOL_LO: f64 = 1e-6;
const VOL_HI: f64 = 5.0;
const PRICE_TOL: f64 = 1e-10;

fn invert(price: f64, value_at: &dyn Fn(f64) -> f64, intrinsic: f64, sup: f64) -> ImpliedVol {
    if !price.is_finite() || price >= sup {
        return ImpliedVol::NotInvertible;
    }
    if price <= intrinsic + PRICE_TOL || price <= value_at(VOL_LO) + PRICE_TOL {
        return ImpliedVol::LowerBound;
    }
    if price >= value_at(VOL_HI) {
        return ImpliedVol::NotInvertible;
    }
    let (mut lo, mut hi) = (VOL_LO, VOL_HI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let diff = value_at(mid) - price;
        if diff.abs() < PRICE_TOL {
            return ImpliedVol::Vol(mid);
        }
        if diff > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ImpliedVol::Vol(0.5 * (lo + hi))
}

/// Invert the lognormal formula by bisection on `[1e-6, 5]`.
pub fn implied_vol_lognormal(price: f64, spot: f64, strike: f64, tau: f64) -> ImpliedVol {
    if !(spot > 0.0) || !(strike > 0.0) || !(tau > 0.0) {
        return ImpliedVol::NotInvertible;
    }
    let intrinsic = (spot - strike).max(0.0);
    invert(price, &|v| lognormal_call(spot, strike, v, tau), intrinsic, spot)
}

/// Invert the normal formula; valid for quotes on sign-changing factors.
pub fn implied_vol_normal(price: f64, spot: f64, strike: f64, tau: f64) -> ImpliedVol {
    if !(tau > 0.0) {
        return ImpliedVol::NotInvertible;
    }
    let intrinsic = (spot - strike).max(0.0);
    invert(price, &|v| normal_call(spot, strike, v, tau), intrinsic, f64::INFINITY)
}

/// Evenly spaced strike grid between two signed standard-deviation offsets
/// from the terminal factor mean. Offsets may both be negative, putting the
/// whole grid in the money.
pub fn strike_grid(mean: f64, variance: f64, lo_sd: f64, hi_sd: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && variance >= 0.0 && lo_sd < hi_sd);
    let sd = variance.sqrt();
    let lo = mean + lo_sd * sd;
    let hi = mean + hi_sd * sd;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_against_reference_points() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        // Phi(1.96) from standard tables
        assert!((norm_cdf(1.96) - 0.9750021048517795).abs() < 1e-12);
        assert!((norm_cdf(-1.96) - 0.0249978951482205).abs() < 1e-12);
    }

    #[test]
    fn lognormal_round_trip() {
        for (spot, strike, vol, tau) in [
            (1.0, 1.0, 0.25, 0.5),
            (1.0, 1.3, 0.4, 0.5),
            (1.0, 0.85, 0.2, 0.25),
            (2.5, 2.0, 0.9, 2.0),
        ] {
            let price = lognormal_call(spot, strike, vol, tau);
            match implied_vol_lognormal(price, spot, strike, tau) {
                ImpliedVol::Vol(v) => {
                    assert!((v - vol).abs() < 1e-7, "{v} vs {vol}");
                }
                other => panic!("expected a vol, got {other:?}"),
            }
        }
    }

    #[test]
    fn normal_round_trip_allows_negative_strikes() {
        for (spot, strike, vol, tau) in [(0.1, -0.2, 0.3, 1.0), (0.0, 0.05, 0.2, 0.5)] {
            let price = normal_call(spot, strike, vol, tau);
            match implied_vol_normal(price, spot, strike, tau) {
                ImpliedVol::Vol(v) => assert!((v - vol).abs() < 1e-7),
                other => panic!("expected a vol, got {other:?}"),
            }
        }
    }

    #[test]
    fn boundary_classification() {
        // at intrinsic: lower bound
        assert_eq!(implied_vol_lognormal(0.3, 1.0, 0.7, 0.5), ImpliedVol::LowerBound);
        // above spot: impossible
        assert_eq!(implied_vol_lognormal(1.01, 1.0, 0.7, 0.5), ImpliedVol::NotInvertible);
        // negative inputs: impossible in the lognormal quote
        assert_eq!(implied_vol_lognormal(0.1, 1.0, -0.2, 0.5), ImpliedVol::NotInvertible);
        assert!(implied_vol_lognormal(0.05, 1.0, 1.0, 0.5).as_f64().is_finite());
        assert!(ImpliedVol::LowerBound.as_f64().is_nan());
    }

    #[test]
    fn call_values_are_monotone_in_vol_and_strike() {
        let mut last = 0.0;
        for i in 1..=20 {
            let v = i as f64 * 0.1;
            let c = lognormal_call(1.0, 1.05, v, 0.5);
            assert!(c > last);
            last = c;
        }
        let mut lastk = f64::INFINITY;
        for i in 0..10 {
            let k = 0.6 + 0.1 * i as f64;
            let c = normal_call(1.0, k, 0.3, 0.5);
            assert!(c < lastk);
            lastk = c;
        }
    }

    #[test]
    fn strike_grid_hits_its_endpoints() {
        let g = strike_grid(1.05, 0.0225, -2.0, 2.0, 15);
        assert_eq!(g.len(), 15);
        assert!((g[7] - 1.05).abs() < 1e-12);
        assert!((g[0] - (1.05 - 0.3)).abs() < 1e-12);
        assert!((g[14] - (1.05 + 0.3)).abs() < 1e-12);
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
        // an all-in-the-money grid stays below the mean
        let itm = strike_grid(1.0, 0.04, -4.5, -1.25, 5);
        assert!((itm[0] - 0.1).abs() < 1e-12);
        assert!((itm[4] - 0.75).abs() < 1e-12);
    }
}
