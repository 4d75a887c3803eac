//! Affine transform machinery shared by the factor models.
//!
//! A d-dimensional affine factor process `Y` has conditional exponential
//! moments of the form
//!
//! ```text
//! E[ exp(u . Y_T) | F_t ] = exp( phi(T - t, u) + psi(T - t, u) . Y_t )
//! ```
//!
//! where `(phi, psi)` solve the generalized Riccati system
//!
//! ```text
//! d/dt phi(t, u) = F(psi(t, u)),   phi(0, u) = 0,
//! d/dt psi(t, u) = R(psi(t, u)),   psi(0, u) = u,
//! ```
//!
//! driven by the functional characteristics `(F, R)`. This module holds the
//! exponent containers, a generic adaptive Runge-Kutta integrator for the
//! system (with explosion detection), the real-domain query used to gate
//! transform evaluations, and the model abstraction the Fourier pricer
//! works against.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `exp` of a real part larger than this overflows; evaluations guard on it.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Solution pair of the Riccati system at a fixed `(t, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExponents {
    pub phi: Complex64,
    pub psi: Vec<Complex64>,
}

impl ComplexExponents {
    /// The full exponent `phi + psi . state` the transform pairs with.
    pub fn pair(&self, state: &[f64]) -> Complex64 {
        assert_eq!(self.psi.len(), state.len(), "state dimension mismatch");
        let mut acc = self.phi;
        for (p, y) in self.psi.iter().zip(state) {
            acc += p * *y;
        }
        acc
    }
}

/// First-derivative pair `(F, R)` of the exponents at `t = 0+`, as maps on
/// complex `psi` vectors, plus a note describing poles and branch points of
/// `F` along the real axis (useful when picking integration arguments).
pub struct FunctionalCharacteristics {
    pub dim: usize,
    pub f: Box<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>,
    pub r: Box<dyn Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync>,
    pub domain_note: &'static str,
}

/// Membership query for the real domain of the transform: is the exponent
/// pair finite at `(horizon, (0, .., 0, u_x))`? Only the payoff-slot
/// coordinate is exercised; the remaining slots sit at zero, which is where
/// every pricing formula in this crate evaluates.
#[derive(Debug, Clone, Copy)]
pub struct DomainQuery {
    pub horizon: f64,
    pub u_x: f64,
}

/// Adaptive step control for [`riccati_integrate`].
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    /// Per-step relative tolerance of the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute floor for the error norm, guards components near zero.
    pub abs_tol: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
    /// |Re| of any exponent component above this trips explosion detection.
    pub exponent_guard: f64,
    /// |F| or |R| component magnitude above this trips explosion detection.
    pub derivative_guard: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_steps: 2_000_000,
            exponent_guard: EXPONENT_GUARD,
            derivative_guard: 1e10,
        }
    }
}

impl StepControl {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidTolerance(format!(
                "rel_tol {} / abs_tol {} must lie in (0, 1)",
                self.rel_tol, self.abs_tol
            )));
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

struct RiccatiRhs<'a> {
    chars: &'a FunctionalCharacteristics,
}

impl RiccatiRhs<'_> {
    /// State layout: `[phi, psi_1, .., psi_d]`.
    fn eval(&self, y: &[Complex64], out: &mut [Complex64]) {
        let psi = &y[1..];
        out[0] = (self.chars.f)(psi);
        let dpsi = (self.chars.r)(psi);
        out[1..].copy_from_slice(&dpsi);
    }
}

fn guard_state(y: &[Complex64], dy: &[Complex64], t: f64, ctrl: &StepControl) -> Result<()> {
    for v in y {
        if !v.re.is_finite() || !v.im.is_finite() || v.re.abs() > ctrl.exponent_guard {
            return Err(Error::PoleEncountered { at: t });
        }
    }
    for v in dy {
        if !v.is_finite() || v.norm() > ctrl.derivative_guard {
            return Err(Error::PoleEncountered { at: t });
        }
    }
    Ok(())
}

/// Integrate the generalized Riccati system from `0` to `t` at initial
/// condition `psi(0) = u`, with adaptive Dormand-Prince 5(4) stepping.
///
/// Explosions (pole crossings, finite-time blow-up) surface as
/// [`Error::PoleEncountered`] carrying the time reached, so callers can
/// compare against theoretical lifetimes.
pub fn riccati_integrate(
    chars: &FunctionalCharacteristics,
    t: f64,
    u: &[Complex64],
    ctrl: &StepControl,
) -> Result<ComplexExponents> {
    ctrl.validate()?;
    if u.len() != chars.dim {
        return Err(Error::InvalidParameter(format!(
            "initial condition dimension {} != model dimension {}",
            u.len(),
            chars.dim
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }

    let dim = chars.dim + 1;
    let mut y = vec![Complex64::new(0.0, 0.0); dim];
    y[1..].copy_from_slice(u);
    if t == 0.0 {
        return Ok(ComplexExponents { phi: y[0], psi: y[1..].to_vec() });
    }

    let rhs = RiccatiRhs { chars };
    let mut k = vec![vec![Complex64::new(0.0, 0.0); dim]; 7];
    let mut ytmp = vec![Complex64::new(0.0, 0.0); dim];

    let mut s = 0.0_f64;
    let mut h = (t / 16.0).min(0.1).max(t * 1e-6);
    let mut steps = 0usize;

    rhs.eval(&y, &mut k[0]);
    guard_state(&y, &k[0], s, ctrl)?;

    while s < t {
        if steps >= ctrl.max_steps {
            return Err(Error::QuadratureNotConverged(format!(
                "riccati step budget exhausted at t = {s}"
            )));
        }
        steps += 1;
        let last = s + h >= t;
        if last {
            h = t - s;
        }

        // stages 2..7 (k[0] holds the FSAL derivative at s)
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    let a = A[stage][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                ytmp[i] = y[i] + acc * h;
            }
            let (head, tail) = k.split_at_mut(stage + 1);
            let _ = head;
            rhs.eval(&ytmp, &mut tail[0]);
            let _ = C[stage];
        }

        // 5th-order solution and embedded error
        let mut err_norm = 0.0_f64;
        for i in 0..dim {
            let mut y5 = Complex64::new(0.0, 0.0);
            let mut y4 = Complex64::new(0.0, 0.0);
            for j in 0..7 {
                if B5[j] != 0.0 {
                    y5 += k[j][i] * B5[j];
                }
                if B4[j] != 0.0 {
                    y4 += k[j][i] * B4[j];
                }
            }
            ytmp[i] = y[i] + y5 * h;
            let scale = ctrl.abs_tol + ctrl.rel_tol * ytmp[i].norm().max(y[i].norm());
            err_norm = err_norm.max((y5 - y4).norm() * h / scale);
        }

        if !err_norm.is_finite() {
            return Err(Error::PoleEncountered { at: s });
        }
        if err_norm <= 1.0 {
            y.copy_from_slice(&ytmp);
            s += h;
            // FSAL: derivative at the new point is stage 7
            let knew = k[6].clone();
            k[0].copy_from_slice(&knew);
            guard_state(&y, &k[0], s, ctrl)?;
            // the clamped step reached t; don't let rounding residue
            // masquerade as a step-size collapse
            if last {
                break;
            }
        }

        let factor = if err_norm > 0.0 { 0.9 * err_norm.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h < t * 1e-15 {
            return Err(Error::PoleEncountered { at: s });
        }
    }

    Ok(ComplexExponents { phi: y[0], psi: y[1..].to_vec() })
}

/// Integrate until the explosion guard trips or `t_max` is reached; returns
/// the trip time, or `None` when the trajectory survives the whole interval.
pub fn explosion_scan(
    chars: &FunctionalCharacteristics,
    u: &[Complex64],
    t_max: f64,
    ctrl: &StepControl,
) -> Result<Option<f64>> {
    match riccati_integrate(chars, t_max, u, ctrl) {
        Ok(_) => Ok(None),
        Err(Error::PoleEncountered { at }) => Ok(Some(at)),
        Err(e) => Err(e),
    }
}

/// `exp(z) - 1` with full accuracy near `z = 0`.
pub(crate) fn cexpm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        // z + z^2/2 + z^3/6 + z^4/24 (next term ~ 1e-17 relative)
        z * (Complex64::new(1.0, 0.0)
            + z * (Complex64::new(0.5, 0.0)
                + z * (Complex64::new(1.0 / 6.0, 0.0) + z * (1.0 / 24.0))))
    } else {
        z.exp() - 1.0
    }
}

/// Continuous (unwrapped) logarithm of a non-vanishing path `z(.)`:
/// `log z(t1)` on the branch reached by following the path from `t0`,
/// starting from the principal value at `t0`. Steps are bisected until each
/// increment's phase change stays below pi/2, so windings are counted.
pub(crate) fn log_along_path(
    z: &dyn Fn(f64) -> Complex64,
    t0: f64,
    t1: f64,
    initial_steps: usize,
) -> Result<Complex64> {
    let z0 = z(t0);
    if z0.norm() < 1e-300 {
        return Err(Error::PoleEncountered { at: t0 });
    }
    let mut acc = z0.ln();
    let n = initial_steps.max(2);
    let mut prev_t = t0;
    let mut prev_z = z0;
    for i in 1..=n {
        let ti = t0 + (t1 - t0) * (i as f64) / (n as f64);
        acc += log_ratio_refined(z, prev_t, prev_z, ti, 0)?;
        prev_z = z(ti);
        prev_t = ti;
    }
    Ok(acc)
}

fn log_ratio_refined(
    z: &dyn Fn(f64) -> Complex64,
    ta: f64,
    za: Complex64,
    tb: f64,
    depth: usize,
) -> Result<Complex64> {
    let zb = z(tb);
    if zb.norm() < 1e-300 {
        return Err(Error::PoleEncountered { at: tb });
    }
    let r = (zb / za).ln();
    if r.im.abs() < std::f64::consts::FRAC_PI_2 {
        return Ok(r);
    }
    if depth >= 48 {
        return Err(Error::PoleEncountered { at: ta });
    }
    let tm = 0.5 * (ta + tb);
    let left = log_ratio_refined(z, ta, za, tm, depth + 1)?;
    let zm = z(tm);
    let right = log_ratio_refined(z, tm, zm, tb, depth + 1)?;
    Ok(left + right)
}

/// Point mass in the time-t conditional law of the terminal payoff factor.
#[derive(Debug, Clone, Copy)]
pub struct PointMass {
    pub location: f64,
    pub mass: f64,
}

/// Derivative of the exponents with respect to the payoff-slot argument.
#[derive(Debug, Clone)]
pub struct DuxExponents {
    pub dphi: Complex64,
    pub dpsi: Vec<Complex64>,
}

/// The interface the Fourier pricer and smile builders work against: exponent
/// evaluation at `u = (0, .., 0, u_x)`, domain gating, and the small amount of
/// distributional information (moments, possible terminal point mass) the
/// quadrature needs.
pub trait AffineModel: Send + Sync {
    /// Dimension of the state vector `Y_t` the exponents pair with.
    fn state_dim(&self) -> usize;

    /// `(phi, psi)(t, (0, .., 0, u_x))` on the branch continuous in `t`.
    fn exponents(&self, t: f64, u_x: Complex64) -> Result<ComplexExponents>;

    /// Lifetime of the transform at real payoff-slot argument `u_x`
    /// (`f64::INFINITY` when it never explodes). Errors with
    /// [`Error::BoundaryCase`] within the rejection radius of a branch point.
    fn horizon_bound(&self, u_x: f64) -> Result<f64>;

    /// Conditional mean and variance of the terminal payoff factor `X_T`
    /// given the state at distance `tau` from the horizon.
    fn terminal_moments(&self, tau: f64, state: &[f64]) -> (f64, f64);

    /// Point mass of the conditional law of `X_T`, if the law has one
    /// (pure-jump models between jumps). `None` for diffusive laws.
    fn terminal_atom(&self, _tau: f64, _state: &[f64]) -> Option<PointMass> {
        None
    }

    /// d/du_x of the exponents. Default: central differences of
    /// [`AffineModel::exponents`], step `1e-6 * (1 + |u_x|)`.
    fn exponents_dux(&self, t: f64, u_x: Complex64) -> Result<DuxExponents> {
        let h = 1e-6 * (1.0 + u_x.norm());
        let up = self.exponents(t, u_x + h)?;
        let dn = self.exponents(t, u_x - h)?;
        let dphi = (up.phi - dn.phi) / (2.0 * h);
        let dpsi = up
            .psi
            .iter()
            .zip(&dn.psi)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        Ok(DuxExponents { dphi, dpsi })
    }

    /// Strict membership of `(horizon, (0, .., 0, u_x))` in the real domain.
    fn domain_contains(&self, q: &DomainQuery) -> Result<bool> {
        if !(q.horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative horizon {}",
                q.horizon
            )));
        }
        Ok(q.horizon < self.horizon_bound(q.u_x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Linear-drift test system: F(u) = a u, R(u) = -b u has the closed form
    /// psi = u e^{-bt}, phi = (a u / b)(1 - e^{-bt}).
    fn linear_chars(a: f64, b: f64) -> FunctionalCharacteristics {
        FunctionalCharacteristics {
            dim: 1,
            f: Box::new(move |p| p[0] * a),
            r: Box::new(move |p| vec![-p[0] * b]),
            domain_note: "entire",
        }
    }

    #[test]
    fn integrator_matches_linear_closed_form() {
        let ch = linear_chars(0.7, 2.0);
        let u = c(0.3, -1.1);
        let t = 1.7;
        let out = riccati_integrate(&ch, t, &[u], &StepControl::default()).unwrap();
        let psi_cf = u * (-2.0 * t).exp();
        let phi_cf = u * (0.7 / 2.0) * (1.0 - (-2.0_f64 * t).exp());
        assert!((out.psi[0] - psi_cf).norm() < 1e-11);
        assert!((out.phi - phi_cf).norm() < 1e-11);
    }

    #[test]
    fn integrator_detects_quadratic_blowup() {
        // psi' = psi^2, psi(0) = 1 explodes at t = 1
        let ch = FunctionalCharacteristics {
            dim: 1,
            f: Box::new(|p| p[0]),
            r: Box::new(|p| vec![p[0] * p[0]]),
            domain_note: "blows up at t = 1/u",
        };
        let trip = explosion_scan(&ch, &[c(1.0, 0.0)], 2.0, &StepControl::default())
            .unwrap()
            .expect("must explode");
        assert!((trip - 1.0).abs() < 0.01, "trip at {trip}");
    }

    #[test]
    fn zero_time_returns_initial_condition() {
        let ch = linear_chars(1.0, 1.0);
        let u = c(0.2, 0.4);
        let out = riccati_integrate(&ch, 0.0, &[u], &StepControl::default()).unwrap();
        assert_eq!(out.phi, c(0.0, 0.0));
        assert_eq!(out.psi[0], u);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let ch = linear_chars(1.0, 1.0);
        let bad = StepControl { rel_tol: 0.0, ..StepControl::default() };
        assert!(matches!(
            riccati_integrate(&ch, 1.0, &[c(0.1, 0.0)], &bad),
            Err(Error::InvalidTolerance(_))
        ));
    }

    #[test]
    fn conjugate_symmetry_under_real_characteristics() {
        let ch = linear_chars(0.5, 1.3);
        let u = c(0.2, 0.9);
        let ctrl = StepControl::default();
        let a = riccati_integrate(&ch, 0.8, &[u], &ctrl).unwrap();
        let b = riccati_integrate(&ch, 0.8, &[u.conj()], &ctrl).unwrap();
        assert!((a.phi.conj() - b.phi).norm() < 1e-12);
        assert!((a.psi[0].conj() - b.psi[0]).norm() < 1e-12);
    }

    #[test]
    fn cexpm1_accurate_for_small_arguments() {
        let z = c(1e-9, -2e-9);
        let got = cexpm1(z);
        // exact to first orders: z + z^2/2
        let want = z + z * z * 0.5;
        assert!((got - want).norm() < 1e-24);
        let z2 = c(0.3, 0.7);
        assert!((cexpm1(z2) - (z2.exp() - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn unwrapped_log_counts_windings() {
        // z(t) = exp(i 3 pi t) winds 1.5 turns over [0, 1]; principal log
        // would alias the phase but the path log must report 3 pi.
        let f = |t: f64| Complex64::from_polar(1.0, 3.0 * std::f64::consts::PI * t);
        let got = log_along_path(&f, 0.0, 1.0, 4).unwrap();
        assert!((got.im - 3.0 * std::f64::consts::PI).abs() < 1e-10);
        assert!(got.re.abs() < 1e-12);
    }
}
