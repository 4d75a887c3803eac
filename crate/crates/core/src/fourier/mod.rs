//! Damped Fourier evaluation of equilibrium price ratios.
//!
//! Every equilibrium price is a ratio `E[p(X_T) z(X_T)] / E[z(X_T)]` of
//! tilted expectations, conditional on the present state. With the model's
//! exponents `M(u) = E[e^{u X_T} | state]` available in closed form, each
//! expectation is a Parseval pairing of the payoff transform against `M`
//! along a damped line:
//!
//! ```text
//! E[p(X) z(X)] = (1/pi) int_0^inf Re[ phat_delta(s) M(-delta + i s) ] ds,
//! ```
//!
//! folded to the half-line by conjugate symmetry. If the conditional law of
//! `X_T` carries a point mass (the jump model between jumps), the mass is
//! priced pointwise and only the continuous remainder is integrated, which
//! restores rapid transform decay. Expectations are returned in scaled form
//! `value * exp(log_scale)` with the anchor magnitude factored out, so
//! ratios of extreme magnitudes stay finite.
//!
//! Routes provided, each usable as an independent cross-check of the others:
//! ratio pricing of all securities in a market ([`price_ratio`]), gradient
//! pricing through tilt perturbations of the weight normalizer
//! ([`price_gradient_form`]), a transform-derivative route for markets with
//! only linear payoffs ([`price_linear_special`]), and pricing of an option
//! in zero net supply ([`price_zero_supply_option`]).

pub mod quad;
pub mod transforms;

pub use quad::{integrate_semi_infinite, QuadOutcome, QuadratureConfig};
pub use transforms::{
    printed_call_transform, printed_stock_transform, printed_weight_transform, DampedTransform,
    TiltedWeight, TransformPayoff,
};

use num_complex::Complex64;

use crate::affine::{AffineModel, DomainQuery, EXPONENT_GUARD};
use crate::equilibrium::PayoffKind;
use crate::error::{Error, Result};

/// Horizons below this are treated as expiry: expectations become pointwise
/// payoff evaluations.
pub const DEGENERATE_HORIZON: f64 = 1e-12;

/// Damping choices for the two-sided payoffs in a ratio computation; call
/// numerators are never damped.
#[derive(Debug, Clone, Copy)]
pub struct DampingPlan {
    /// Damping of linear-payoff numerators.
    pub alpha: f64,
    /// Damping of the weight normalizer (denominator).
    pub beta: f64,
}

/// Midpoint-of-window plan.
pub fn default_damping_plan(weight: &TiltedWeight) -> Result<DampingPlan> {
    let mid = weight.default_damping(&TransformPayoff::One)?;
    Ok(DampingPlan { alpha: mid, beta: mid })
}

/// A tilted expectation `E[p(X_T) z(X_T) | state] = scaled * exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledExpectation {
    pub scaled: f64,
    pub log_scale: f64,
    pub quad_error: f64,
    pub evaluations: usize,
}

impl ScaledExpectation {
    pub fn value(&self) -> Result<f64> {
        if self.log_scale.abs() > EXPONENT_GUARD {
            return Err(Error::Overflow(self.log_scale));
        }
        Ok(self.scaled * self.log_scale.exp())
    }
}

/// Evaluate `E[p(X_T) z(X_T) | state]` by damped transform quadrature.
pub fn damped_expectation(
    model: &dyn AffineModel,
    tau: f64,
    state: &[f64],
    weight: &TiltedWeight,
    payoff: &TransformPayoff,
    damping: f64,
    cfg: &QuadratureConfig,
) -> Result<ScaledExpectation> {
    if state.len() != model.state_dim() {
        return Err(Error::InvalidParameter(format!(
            "state length {} != model dimension {}",
            state.len(),
            model.state_dim()
        )));
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative horizon {tau}")));
    }
    let x_now = *state.last().expect("state checked nonempty");

    if tau < DEGENERATE_HORIZON {
        return Ok(ScaledExpectation {
            scaled: payoff.eval(x_now),
            log_scale: -weight.exponent(x_now),
            quad_error: 0.0,
            evaluations: 0,
        });
    }

    let transform = DampedTransform::new(weight, payoff, damping)?;
    if !model.domain_contains(&DomainQuery { horizon: tau, u_x: -damping })? {
        return Err(Error::DomainViolation(format!(
            "transform argument {} lies outside the model domain at horizon {tau}",
            -damping
        )));
    }

    let anchor = model.exponents(tau, Complex64::new(-damping, 0.0))?;
    let off = anchor.pair(state).re;

    let atom = model
        .terminal_atom(tau, state)
        .filter(|a| a.mass > 1e-14);

    let mut osc = x_now.abs();
    for k in weight.strikes() {
        osc = osc.max(k.abs());
    }
    if let TransformPayoff::Call { strike } = payoff {
        osc = osc.max(strike.abs());
    }
    if let Some(a) = &atom {
        osc = osc.max(a.location.abs());
    }
    let eff_cfg = QuadratureConfig { osc_scale: cfg.osc_scale.max(osc), ..*cfg };

    let integrand = |s: f64| -> Result<f64> {
        let e = model.exponents(tau, Complex64::new(-damping, s))?;
        let expo = e.pair(state) - off;
        if expo.re > EXPONENT_GUARD {
            return Err(Error::Overflow(expo.re));
        }
        let mut m = expo.exp();
        if let Some(a) = &atom {
            let atom_expo = Complex64::new(-damping * a.location - off, s * a.location);
            m -= atom_expo.exp() * a.mass;
        }
        Ok((transform.eval(s) * m).re)
    };

    let quad = integrate_semi_infinite(&integrand, &eff_cfg)?;
    let mut scaled = quad.value / std::f64::consts::PI;

    if let Some(a) = &atom {
        let log_atom = -weight.exponent(a.location) - off;
        if log_atom > EXPONENT_GUARD {
            return Err(Error::Overflow(log_atom));
        }
        scaled += a.mass * payoff.eval(a.location) * log_atom.exp();
    }

    Ok(ScaledExpectation {
        scaled,
        log_scale: off,
        quad_error: quad.error_estimate / std::f64::consts::PI,
        evaluations: quad.evaluations,
    })
}

/// All security prices of a market, plus diagnostics.
#[derive(Debug, Clone)]
pub struct RatioPrices {
    /// One price per input security, in input order.
    pub values: Vec<f64>,
    /// Largest propagated quadrature error across the prices.
    pub quad_error: f64,
    /// The weight normalizer `E[z(X_T) | state]`.
    pub denominator: f64,
}

/// Price every security of the market `(securities, gamma_tilde)` as a
/// tilted-expectation ratio. `plan` overrides the default midpoint damping.
pub fn price_ratio(
    model: &dyn AffineModel,
    tau: f64,
    state: &[f64],
    securities: &[PayoffKind],
    gamma_tilde: &[f64],
    plan: Option<DampingPlan>,
    cfg: &QuadratureConfig,
) -> Result<RatioPrices> {
    let (weight, payoffs) = TiltedWeight::from_market(securities, gamma_tilde)?;
    let needs_two_sided = payoffs.iter().any(|p| matches!(p, TransformPayoff::Linear));
    let plan = match plan {
        Some(p) => p,
        None => {
            if needs_two_sided || weight.total_slope() > weight.zeta_linear() {
                default_damping_plan(&weight)?
            } else {
                DampingPlan { alpha: 0.0, beta: 0.0 }
            }
        }
    };

    let den = damped_expectation(model, tau, state, &weight, &TransformPayoff::One, plan.beta, cfg)?;
    if !(den.scaled > 0.0) {
        return Err(Error::QuadratureNotConverged(format!(
            "weight normalizer came out nonpositive ({})",
            den.scaled
        )));
    }

    let mut values = Vec::with_capacity(payoffs.len());
    let mut worst = 0.0_f64;
    for payoff in &payoffs {
        let damping = match payoff {
            TransformPayoff::Linear => plan.alpha,
            TransformPayoff::Call { .. } => 0.0,
            TransformPayoff::One => unreachable!("markets contain payoffs, not normalizers"),
        };
        let num = damped_expectation(model, tau, state, &weight, payoff, damping, cfg)?;
        let shift = num.log_scale - den.log_scale;
        if shift.abs() > EXPONENT_GUARD {
            return Err(Error::Overflow(shift));
        }
        let value = num.scaled / den.scaled * shift.exp();
        let err = (num.quad_error / den.scaled * shift.exp()).abs()
            + (value * den.quad_error / den.scaled).abs();
        worst = worst.max(err);
        values.push(value);
    }
    Ok(RatioPrices { values, quad_error: worst, denominator: den.value()? })
}

/// Price each security by differentiating the log weight normalizer in its
/// tilt: `S_k = -d/d zeta_k log E[exp(-sum_j zeta_j f_j(X_T))]`, central
/// differences with step `1e-5 (1 + |zeta_k|)`. Independent of the ratio
/// route: it never forms payoff-weighted numerators.
pub fn price_gradient_form(
    model: &dyn AffineModel,
    tau: f64,
    state: &[f64],
    securities: &[PayoffKind],
    gamma_tilde: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    if securities.len() != gamma_tilde.len() {
        return Err(Error::InvalidParameter(format!(
            "{} securities vs {} tilts",
            securities.len(),
            gamma_tilde.len()
        )));
    }
    let log_h = |zetas: &[f64]| -> Result<f64> {
        let (weight, _) = TiltedWeight::from_market(securities, zetas)?;
        let beta = weight.default_damping(&TransformPayoff::One)?;
        let h = damped_expectation(model, tau, state, &weight, &TransformPayoff::One, beta, cfg)?;
        if !(h.scaled > 0.0) {
            return Err(Error::QuadratureNotConverged(format!(
                "weight normalizer came out nonpositive ({})",
                h.scaled
            )));
        }
        Ok(h.scaled.ln() + h.log_scale)
    };

    let mut out = Vec::with_capacity(securities.len());
    for k in 0..securities.len() {
        let step = 1e-5 * (1.0 + gamma_tilde[k].abs());
        let mut up = gamma_tilde.to_vec();
        up[k] += step;
        let mut dn = gamma_tilde.to_vec();
        dn[k] -= step;
        out.push(-(log_h(&up)? - log_h(&dn)?) / (2.0 * step));
    }
    Ok(out)
}

/// Price the linear payoff when it is the only kind in the market: the tilted
/// ratio collapses to the derivative of the exponents at the real point
/// `-zeta_total`, evaluated here through the model's `d/du` route (central
/// differences by default) rather than any closed-form price.
pub fn price_linear_special(
    model: &dyn AffineModel,
    tau: f64,
    state: &[f64],
    zeta_total: f64,
) -> Result<f64> {
    if state.len() != model.state_dim() {
        return Err(Error::InvalidParameter(format!(
            "state length {} != model dimension {}",
            state.len(),
            model.state_dim()
        )));
    }
    let d = model.exponents_dux(tau, Complex64::new(-zeta_total, 0.0))?;
    let mut acc = d.dphi;
    for (dp, y) in d.dpsi.iter().zip(state) {
        acc += dp * *y;
    }
    if acc.im.abs() > 1e-9 * (1.0 + acc.re.abs()) {
        return Err(Error::NonRealResult { imag: acc.im });
    }
    Ok(acc.re)
}

/// Price a call in zero net supply: it carries no tilt of its own, so the
/// weight comes entirely from the market securities. When that weight has no
/// call component the normalizer is evaluated directly from the exponents;
/// otherwise it is integrated like any other tilted expectation.
pub fn price_zero_supply_option(
    model: &dyn AffineModel,
    tau: f64,
    state: &[f64],
    securities: &[PayoffKind],
    gamma_tilde: &[f64],
    strike: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (weight, _) = TiltedWeight::from_market(securities, gamma_tilde)?;
    let num = damped_expectation(
        model,
        tau,
        state,
        &weight,
        &TransformPayoff::Call { strike },
        0.0,
        cfg,
    )?;

    let (den_scaled, den_log) = if weight.total_slope() == weight.zeta_linear() {
        if tau < DEGENERATE_HORIZON {
            (1.0, -weight.exponent(*state.last().unwrap()))
        } else {
            let anchor = model.exponents(tau, Complex64::new(-weight.zeta_linear(), 0.0))?;
            let pair = anchor.pair(state);
            if pair.im.abs() > 1e-9 {
                return Err(Error::NonRealResult { imag: pair.im });
            }
            (1.0, pair.re)
        }
    } else {
        let beta = weight.default_damping(&TransformPayoff::One)?;
        let den =
            damped_expectation(model, tau, state, &weight, &TransformPayoff::One, beta, cfg)?;
        if !(den.scaled > 0.0) {
            return Err(Error::QuadratureNotConverged(format!(
                "weight normalizer came out nonpositive ({})",
                den.scaled
            )));
        }
        (den.scaled, den.log_scale)
    };

    let shift = num.log_scale - den_log;
    if shift.abs() > EXPONENT_GUARD {
        return Err(Error::Overflow(shift));
    }
    Ok(num.scaled / den_scaled * shift.exp())
}
