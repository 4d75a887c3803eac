//! Square-root stochastic-variance factor model with additive payoff noise.
//!
//! The factor pair `Y = (V, X)` follows
//!
//! ```text
//! dV_t = (kappa - lambda V_t) dt + sigma sqrt(V_t) dW1_t,
//! dX_t = mu dt + sqrt(V_t) dW2_t,
//! ```
//!
//! with independent Brownian motions. `X` is the terminal payoff factor,
//! `V` its instantaneous variance. The model is affine with functional
//! characteristics
//!
//! ```text
//! F(u) = kappa u_v + mu u_x,
//! R(u) = (sigma^2 u_v^2 / 2 - lambda u_v + u_x^2 / 2, 0),
//! ```
//!
//! and the Riccati system solves in closed form. All evaluations below use
//! `theta = sqrt(lambda^2 - sigma^2 u_x^2)` (principal branch; every formula
//! is even in `theta`, so the branch choice is immaterial) and are organized
//! around `q = exp(-theta tau)` so that nothing overflows for large real
//! `theta tau` and the `theta -> 0` boundary is reached smoothly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::affine::{
    cexpm1, log_along_path, AffineModel, ComplexExponents, FunctionalCharacteristics,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HestonParams {
    /// Drift of the payoff factor.
    pub mu: f64,
    /// Constant inflow of the variance drift `kappa - lambda v`.
    pub kappa: f64,
    /// Mean-reversion speed of the variance.
    pub lambda: f64,
    /// Volatility of variance.
    pub sigma: f64,
    /// Initial variance.
    pub v0: f64,
    /// Initial payoff factor level.
    pub x0: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda {} and sigma {} must be positive",
                self.lambda, self.sigma
            )));
        }
        if !(self.kappa >= 0.0) || !(self.v0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa {} and v0 {} must be nonnegative",
                self.kappa, self.v0
            )));
        }
        if !self.mu.is_finite() || !self.x0.is_finite() {
            return Err(Error::InvalidParameter("mu and x0 must be finite".into()));
        }
        Ok(())
    }

    /// `sqrt(lambda^2 - sigma^2 u_x^2)`, principal branch.
    pub fn theta(&self, u_x: Complex64) -> Complex64 {
        (Complex64::new(self.lambda * self.lambda, 0.0)
            - u_x * u_x * (self.sigma * self.sigma))
            .sqrt()
    }

    /// Lifetime of the exponents at real payoff-slot argument `u_x`.
    ///
    /// Infinite for `sigma^2 u_x^2 <= lambda^2`. Beyond that `theta = i w`
    /// and the denominator of `psi_v` first vanishes at
    /// `(2 / w)(pi - arctan(w / lambda))`, where the exponents blow up.
    pub fn max_horizon(&self, u_x: f64) -> f64 {
        let disc = self.lambda * self.lambda - self.sigma * self.sigma * u_x * u_x;
        if disc >= 0.0 {
            f64::INFINITY
        } else {
            let w = (-disc).sqrt();
            (2.0 / w) * (std::f64::consts::PI - (w / self.lambda).atan())
        }
    }

    /// `(phi, psi_v, psi_x)` at `u = (0, u_x)`, horizon `tau`, on the branch
    /// continuous in `tau`. Gated by the real-part lifetime.
    pub fn exponents(&self, tau: f64, u_x: Complex64) -> Result<ComplexExponents> {
        self.validate()?;
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative horizon {tau}")));
        }
        let max = self.max_horizon(u_x.re);
        if tau >= max {
            return Err(Error::HorizonExceeded { horizon: tau, max });
        }
        if tau == 0.0 {
            return Ok(ComplexExponents {
                phi: Complex64::new(0.0, 0.0),
                psi: vec![Complex64::new(0.0, 0.0), u_x],
            });
        }

        let lam = self.lambda;
        let th = self.theta(u_x);

        // h(t) = (1 + e^{-theta t})/2 + (lambda t / 2) (1 - e^{-theta t})/(theta t)
        // satisfies h(0) = 1, stays bounded, and reaches theta = 0 smoothly as
        // h = 1 + lambda t / 2. Its zeros are exactly the exponent blow-ups,
        // excluded by the gate above, so the unwrapped log along t is finite.
        let h_fn = move |t: f64| -> Complex64 {
            let z = th * t;
            let em1c = if z.norm() < 1e-8 {
                // (1 - e^{-z})/z = 1 - z/2 + z^2/6
                Complex64::new(1.0, 0.0) - z * 0.5 + z * z * (1.0 / 6.0)
            } else {
                -cexpm1(-z) / z
            };
            (Complex64::new(1.0, 0.0) + (-z).exp()) * 0.5 + em1c * (lam * t * 0.5)
        };
        let steps = ((th.im.abs() * tau / std::f64::consts::FRAC_PI_4).ceil() as usize) + 2;
        let log_h = log_along_path(&h_fn, 0.0, tau, steps)?;

        let two_k_over_s2 = 2.0 * self.kappa / (self.sigma * self.sigma);
        let phi = ((Complex64::new(lam, 0.0) - th) * (tau * 0.5) - log_h) * two_k_over_s2
            + u_x * (self.mu * tau);

        // psi_v = u_x^2 em1 / (2 theta + (lambda - theta) em1), em1 = 1 - q;
        // at theta = 0 exactly this is 0/0 with limit u_x^2 tau / (2 + lambda tau)
        let ratio = if th.norm() * (1.0 + tau) < 1e-12 {
            Complex64::new(tau / (2.0 + lam * tau), 0.0)
        } else {
            let em1 = -cexpm1(-th * tau);
            let ds = th * 2.0 + (Complex64::new(lam, 0.0) - th) * em1;
            em1 / ds
        };
        let psi_v = u_x * u_x * ratio;

        Ok(ComplexExponents { phi, psi: vec![psi_v, u_x] })
    }

    /// State-independent coefficient of the linear equilibrium price,
    /// `d/du phi(tau, u)` at `u = -gamma_tilde`, evaluated in closed form.
    pub fn coefficient_t(&self, tau: f64, gamma_tilde: f64) -> Result<f64> {
        let (t, _) = self.price_coefficients(tau, gamma_tilde)?;
        Ok(t)
    }

    /// Variance-slot coefficient `Gamma`; the price loads `-gamma_tilde *
    /// Gamma` on `V_t`.
    pub fn coefficient_gamma(&self, tau: f64, gamma_tilde: f64) -> Result<f64> {
        let (_, g) = self.price_coefficients(tau, gamma_tilde)?;
        Ok(g)
    }

    fn price_coefficients(&self, tau: f64, g: f64) -> Result<(f64, f64)> {
        self.validate()?;
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative horizon {tau}")));
        }
        let lam = self.lambda;
        let sig = self.sigma;
        if (sig * g.abs() - lam).abs() < 1e-8 {
            return Err(Error::BoundaryCase(format!(
                "sigma |gamma_tilde| = {} within 1e-8 of lambda = {lam}; the \
                 closed-form coefficients degenerate, perturb gamma_tilde",
                sig * g.abs()
            )));
        }
        let max = self.max_horizon(g);
        if tau >= max {
            return Err(Error::HorizonExceeded { horizon: tau, max });
        }
        if g == 0.0 {
            return Ok((self.mu * tau, {
                // limit of Gamma as gamma -> 0: (1 - e^{-lambda tau}) / lambda
                -(-lam * tau).exp_m1() / lam
            }));
        }

        let th = self.theta(Complex64::new(g, 0.0));
        let q = (-th * tau).exp();
        let one = Complex64::new(1.0, 0.0);
        let dq = th * (one + q) + (one - q) * lam;
        let nq = th * (tau * 0.5) * (one - q) + (one + q) * (lam * tau * 0.5)
            - (one - q) * lam / th;
        let t_val = Complex64::new(self.mu * tau, 0.0) - (nq / dq) * (2.0 * self.kappa * g) / th;

        let tp = th.inv() * (sig * sig * g);
        let aq = (one - q) * 2.0 - tp * (g * tau);
        let gamma_val = aq / dq
            + (one - q) * (tp * (one + q) + Complex64::new(tau * (g * sig * sig), 0.0)
                + tp * (tau * lam))
                * g
                / (dq * dq);

        for (name, z) in [("T", t_val), ("Gamma", gamma_val)] {
            if z.im.abs() > 1e-9 {
                return Err(Error::NonRealResult { imag: z.im });
            }
            let _ = name;
        }
        Ok((t_val.re, gamma_val.re))
    }

    /// Equilibrium price of the linear payoff `X_T` at time to maturity
    /// `tau`, adjusted risk aversion `gamma_tilde`, and state `(v, x)`:
    /// `T(tau) - gamma_tilde Gamma(tau) v + x`.
    pub fn equilibrium_price(&self, tau: f64, gamma_tilde: f64, v: f64, x: f64) -> Result<f64> {
        let (t, gam) = self.price_coefficients(tau, gamma_tilde)?;
        Ok(t - gamma_tilde * gam * v + x)
    }

    /// `(F, R)` for the generic Riccati integrator; order `(u_v, u_x)`.
    pub fn characteristics(&self) -> FunctionalCharacteristics {
        let (mu, kap, lam, sig) = (self.mu, self.kappa, self.lambda, self.sigma);
        FunctionalCharacteristics {
            dim: 2,
            f: Box::new(move |u| u[0] * kap + u[1] * mu),
            r: Box::new(move |u| {
                vec![
                    u[0] * u[0] * (sig * sig * 0.5) - u[0] * lam + u[1] * u[1] * 0.5,
                    Complex64::new(0.0, 0.0),
                ]
            }),
            domain_note: "entire in u_v; blows up past the psi_v pole when \
                          sigma^2 u_x^2 > lambda^2",
        }
    }
}

/// State layout for the [`AffineModel`] view: `[v, x]`.
impl AffineModel for HestonParams {
    fn state_dim(&self) -> usize {
        2
    }

    fn exponents(&self, t: f64, u_x: Complex64) -> Result<ComplexExponents> {
        HestonParams::exponents(self, t, u_x)
    }

    fn horizon_bound(&self, u_x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.max_horizon(u_x))
    }

    fn terminal_moments(&self, tau: f64, state: &[f64]) -> (f64, f64) {
        assert_eq!(state.len(), 2);
        let (v, x) = (state[0], state[1]);
        let mean = x + self.mu * tau;
        // Var X_T = integral of E[V_s] over [0, tau],
        // E[V_s] = kappa/lambda + (v - kappa/lambda) e^{-lambda s}
        let vbar = self.kappa / self.lambda;
        let var = vbar * tau + (v - vbar) * (-(-self.lambda * tau).exp_m1()) / self.lambda;
        (mean, var)
    }
}
