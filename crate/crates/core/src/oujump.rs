//! Mean-reverting pure-jump factor model with two-sided exponential jumps.
//!
//! The payoff factor follows
//!
//! ```text
//! dX_t = lambda (mu - X_t) dt + dJ_t,
//! ```
//!
//! where `J` is compound Poisson with intensity `kappa` and Laplace jump
//! sizes of density `(theta / 2) e^{-theta |x|}`. The model is affine in one
//! dimension with
//!
//! ```text
//! F(u) = lambda mu u + kappa u^2 / (theta^2 - u^2),
//! R(u) = -lambda u,
//! ```
//!
//! and the exponents solve in closed form:
//!
//! ```text
//! psi(tau, u) = u e^{-lambda tau},
//! phi(tau, u) = (kappa / 2 lambda) [ Ln(theta^2 - u^2 e^{-2 lambda tau})
//!                                   - Ln(theta^2 - u^2) ]
//!               + mu u (1 - e^{-lambda tau}).
//! ```
//!
//! Principal logs suffice on the whole gated domain: the path
//! `t -> theta^2 - u^2 e^{-2 lambda t}` is a straight segment whose imaginary
//! part keeps a constant sign, so it cannot cross the negative-axis branch
//! cut except by passing through zero, and that crossing is exactly the
//! horizon the gate excludes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineModel, ComplexExponents, FunctionalCharacteristics, PointMass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuJumpParams {
    /// Mean-reversion speed.
    pub lambda: f64,
    /// Reversion level.
    pub mu: f64,
    /// Jump intensity.
    pub kappa: f64,
    /// Jump-size decay rate; typical jump magnitude is `1 / theta`.
    pub theta: f64,
    /// Initial factor level.
    pub x0: f64,
}

impl OuJumpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.kappa > 0.0) || !(self.theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda {}, kappa {}, theta {} must be positive",
                self.lambda, self.kappa, self.theta
            )));
        }
        if !self.mu.is_finite() || !self.x0.is_finite() {
            return Err(Error::InvalidParameter("mu and x0 must be finite".into()));
        }
        Ok(())
    }

    /// Lifetime of the exponents at real argument `u`: infinite inside the
    /// jump-transform strip `|u| < theta`, and
    /// `t* = (1 / lambda) ln(|u| / theta)` outside it, where the reverted
    /// argument `u e^{-lambda t}` meets the pole of `F` at `theta`.
    /// Arguments within `1e-8 theta` of the strip edge are rejected as
    /// boundary cases (the pole sits at `t = 0` there).
    pub fn max_horizon(&self, u: f64) -> Result<f64> {
        self.validate()?;
        let a = u.abs();
        if (a - self.theta).abs() < 1e-8 * self.theta {
            return Err(Error::BoundaryCase(format!(
                "|u| = {a} within 1e-8 of the jump-transform pole theta = {}",
                self.theta
            )));
        }
        if a < self.theta {
            Ok(f64::INFINITY)
        } else {
            Ok((a / self.theta).ln() / self.lambda)
        }
    }

    /// `(phi, psi)` at horizon `tau`, gated by the real-part lifetime.
    pub fn exponents(&self, tau: f64, u: Complex64) -> Result<ComplexExponents> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative horizon {tau}")));
        }
        let max = self.max_horizon(u.re)?;
        if tau >= max {
            return Err(Error::HorizonExceeded { horizon: tau, max });
        }
        let th2 = self.theta * self.theta;
        let decay = (-self.lambda * tau).exp();
        let psi = u * decay;
        let num = Complex64::new(th2, 0.0) - u * u * (decay * decay);
        let den = Complex64::new(th2, 0.0) - u * u;
        let phi = (num.ln() - den.ln()) * (self.kappa / (2.0 * self.lambda))
            + u * (self.mu * (-(-self.lambda * tau).exp_m1()));
        Ok(ComplexExponents { phi, psi: vec![psi] })
    }

    /// Equilibrium price of the linear payoff `X_T`:
    /// `d/du [phi + psi x]` at `u = -gamma_tilde`, in closed form.
    pub fn equilibrium_price(&self, tau: f64, gamma_tilde: f64, x: f64) -> Result<f64> {
        self.validate()?;
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative horizon {tau}")));
        }
        if gamma_tilde.abs() >= self.theta {
            return Err(Error::IntegrabilityViolation(format!(
                "|gamma_tilde| = {} must stay below the jump-transform pole \
                 theta = {} for the pricing weight to be integrable",
                gamma_tilde.abs(),
                self.theta
            )));
        }
        let th2 = self.theta * self.theta;
        let g2 = gamma_tilde * gamma_tilde;
        let e1 = (-self.lambda * tau).exp();
        let e2 = e1 * e1;
        let jump_term = self.kappa * th2 * gamma_tilde * (e2 - 1.0)
            / (self.lambda * (th2 - g2) * (th2 - g2 * e2));
        Ok(jump_term + self.mu * (1.0 - e1) + e1 * x)
    }

    /// `(F, R)` for the generic Riccati integrator.
    pub fn characteristics(&self) -> FunctionalCharacteristics {
        let (lam, mu, kap, th2) = (self.lambda, self.mu, self.kappa, self.theta * self.theta);
        FunctionalCharacteristics {
            dim: 1,
            f: Box::new(move |u| {
                let u2 = u[0] * u[0];
                u[0] * (lam * mu) + u2 * kap / (Complex64::new(th2, 0.0) - u2)
            }),
            r: Box::new(move |u| vec![-u[0] * lam]),
            domain_note: "poles of F at u = +-theta",
        }
    }
}

/// State layout for the [`AffineModel`] view: `[x]`.
impl AffineModel for OuJumpParams {
    fn state_dim(&self) -> usize {
        1
    }

    fn exponents(&self, t: f64, u_x: Complex64) -> Result<ComplexExponents> {
        OuJumpParams::exponents(self, t, u_x)
    }

    fn horizon_bound(&self, u_x: f64) -> Result<f64> {
        self.max_horizon(u_x)
    }

    fn terminal_moments(&self, tau: f64, state: &[f64]) -> (f64, f64) {
        assert_eq!(state.len(), 1);
        let e1 = (-self.lambda * tau).exp();
        let mean = self.mu + (state[0] - self.mu) * e1;
        // jump-size variance 2 / theta^2, discounted through the reversion
        let var = self.kappa * (2.0 / (self.theta * self.theta))
            * (1.0 - e1 * e1)
            / (2.0 * self.lambda);
        (mean, var)
    }

    /// With probability `e^{-kappa tau}` no jump lands in `(t, T]` and `X_T`
    /// is the deterministic reverted level.
    fn terminal_atom(&self, tau: f64, state: &[f64]) -> Option<PointMass> {
        assert_eq!(state.len(), 1);
        let e1 = (-self.lambda * tau).exp();
        Some(PointMass {
            location: self.mu + (state[0] - self.mu) * e1,
            mass: (-self.kappa * tau).exp(),
        })
    }
}
