//! Fourier transforms of tilted payoff functions.
//!
//! The pricing weight is `z(x) = exp(-(zeta_0 x + sum_k zeta_k (x - K_k)^+))`
//! with sorted strikes `K_k`; every quantity priced is an expectation of
//! `p(x) z(x)` for a piecewise-linear payoff `p`. The damped product
//! `p(x) z(x) e^{delta x}` is integrable when `delta` lies in a window
//! determined by the weight slopes, and its Fourier transform is a finite
//! sum of interval integrals of `(A + B x) e^{w x}`.
//!
//! Two evaluations are provided:
//!
//! - [`DampedTransform`]: the interval (divided-difference) form, assembled
//!   from kernels entire in `w`, so knot slopes may coincide or vanish
//!   without hitting spurious poles. This is the production path.
//! - `printed_*`: telescoped closed forms for the special case of one linear
//!   security and equal tilts across all securities. They carry removable
//!   singularities at `delta = j * gamma`, and exist here as an independent
//!   cross-check of the interval form.

use num_complex::Complex64;

use crate::equilibrium::PayoffKind;
use crate::error::{Error, Result};

/// `exp(z) - 1` over `z`, entire, accurate near zero.
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.05 {
        // sum z^m / (m+1)!
        let mut acc = Complex64::new(0.0, 0.0);
        let coefs = [
            1.0,
            1.0 / 2.0,
            1.0 / 6.0,
            1.0 / 24.0,
            1.0 / 120.0,
            1.0 / 720.0,
            1.0 / 5040.0,
        ];
        for c in coefs.iter().rev() {
            acc = acc * z + *c;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `int_0^1 t e^{z t} dt = (e^z (z - 1) + 1) / z^2`, entire.
fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.05 {
        // sum z^m / (m! (m+2))
        let coefs = [
            1.0 / 2.0,
            1.0 / 3.0,
            1.0 / 8.0,
            1.0 / 30.0,
            1.0 / 144.0,
            1.0 / 840.0,
            1.0 / 5760.0,
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for c in coefs.iter().rev() {
            acc = acc * z + *c;
        }
        acc
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// The tilting weight `z(x) = exp(-(zeta_linear x + sum zeta_calls[k]
/// (x - strikes[k])^+))`. Strikes are sorted and deduplicated on
/// construction.
#[derive(Debug, Clone)]
pub struct TiltedWeight {
    zeta_linear: f64,
    strikes: Vec<f64>,
    zeta_calls: Vec<f64>,
}

impl TiltedWeight {
    pub fn new(zeta_linear: f64, call_tilts: &[(f64, f64)]) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = call_tilts.to_vec();
        for (k, z) in &pairs {
            if !k.is_finite() || !z.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite strike/tilt pair ({k}, {z})"
                )));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut strikes = Vec::new();
        let mut zetas: Vec<f64> = Vec::new();
        for (k, z) in pairs {
            if strikes.last() == Some(&k) {
                *zetas.last_mut().unwrap() += z;
            } else {
                strikes.push(k);
                zetas.push(z);
            }
        }
        Ok(TiltedWeight { zeta_linear, strikes, zeta_calls: zetas })
    }

    /// Assemble the weight of a full market, `zeta = gamma_tilde` per
    /// security, and return each security's payoff in transform terms.
    pub fn from_market(
        securities: &[PayoffKind],
        zetas: &[f64],
    ) -> Result<(Self, Vec<TransformPayoff>)> {
        if securities.len() != zetas.len() {
            return Err(Error::InvalidParameter(format!(
                "{} securities vs {} tilts",
                securities.len(),
                zetas.len()
            )));
        }
        let mut linear = 0.0;
        let mut calls = Vec::new();
        let mut payoffs = Vec::with_capacity(securities.len());
        for (sec, z) in securities.iter().zip(zetas) {
            match sec {
                PayoffKind::Linear => {
                    linear += z;
                    payoffs.push(TransformPayoff::Linear);
                }
                PayoffKind::Call { strike } => {
                    calls.push((*strike, *z));
                    payoffs.push(TransformPayoff::Call { strike: *strike });
                }
            }
        }
        Ok((TiltedWeight::new(linear, &calls)?, payoffs))
    }

    /// The exponent `l(x)` with `z(x) = e^{-l(x)}`.
    pub fn exponent(&self, x: f64) -> f64 {
        let mut l = self.zeta_linear * x;
        for (k, z) in self.strikes.iter().zip(&self.zeta_calls) {
            l += z * (x - k).max(0.0);
        }
        l
    }

    pub fn zeta_linear(&self) -> f64 {
        self.zeta_linear
    }

    pub fn total_slope(&self) -> f64 {
        self.zeta_linear + self.zeta_calls.iter().sum::<f64>()
    }

    pub fn strikes(&self) -> &[f64] {
        &self.strikes
    }

    /// Open damping window for transforming `p(x) z(x) e^{delta x}`:
    /// the slope constraints at whichever of the two infinite intervals the
    /// payoff actually reaches.
    pub fn damping_window(&self, payoff: &TransformPayoff) -> (f64, f64) {
        let needs_lower = matches!(payoff, TransformPayoff::One | TransformPayoff::Linear);
        let lo = if needs_lower { self.zeta_linear } else { f64::NEG_INFINITY };
        (lo, self.total_slope())
    }

    /// Midpoint damping for payoffs that touch both tails; errors when the
    /// window is empty (a market with no call tilt cannot damp a linear
    /// payoff on both sides).
    pub fn default_damping(&self, payoff: &TransformPayoff) -> Result<f64> {
        let (lo, hi) = self.damping_window(payoff);
        if matches!(payoff, TransformPayoff::Call { .. }) {
            return Ok(0.0);
        }
        if !(hi > lo) {
            return Err(Error::InvalidDamping(format!(
                "empty damping window ({lo}, {hi}); the weight needs positive \
                 total call tilt to damp a two-sided payoff"
            )));
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Payoff factor in the transform integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformPayoff {
    /// Constant 1 (weight normalizer).
    One,
    /// The factor itself.
    Linear,
    /// `(x - strike)^+`; the strike need not belong to the weight.
    Call { strike: f64 },
}

impl TransformPayoff {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TransformPayoff::One => 1.0,
            TransformPayoff::Linear => x,
            TransformPayoff::Call { strike } => (x - strike).max(0.0),
        }
    }
}

/// Precomputed interval data for `s -> int p(x) z(x) e^{(delta - i s) x} dx`.
#[derive(Debug, Clone)]
pub struct DampedTransform {
    knots: Vec<f64>,
    /// Real part of the interval kernel exponent, `delta - slope_j`,
    /// one per interval (len = knots + 1).
    w_re: Vec<f64>,
    /// Log prefactor of the weight on each interval.
    icpt: Vec<f64>,
    /// Payoff `(A, B)` with `p(x) = A + B x` on each interval.
    lin: Vec<(f64, f64)>,
}

impl DampedTransform {
    pub fn new(weight: &TiltedWeight, payoff: &TransformPayoff, damping: f64) -> Result<Self> {
        // merge weight strikes with the payoff kink
        let mut knots: Vec<(f64, f64)> = weight
            .strikes
            .iter()
            .zip(&weight.zeta_calls)
            .map(|(k, z)| (*k, *z))
            .collect();
        if let TransformPayoff::Call { strike } = payoff {
            match knots.binary_search_by(|probe| probe.0.total_cmp(strike)) {
                Ok(_) => {}
                Err(pos) => knots.insert(pos, (*strike, 0.0)),
            }
        }

        let m = knots.len();
        let mut w_re = Vec::with_capacity(m + 1);
        let mut icpt = Vec::with_capacity(m + 1);
        let mut lin = Vec::with_capacity(m + 1);
        let mut slope = weight.zeta_linear;
        let mut log_pre = 0.0;
        // interval 0 is (-inf, K_0)
        for j in 0..=m {
            if j > 0 {
                let (k, dz) = knots[j - 1];
                slope += dz;
                log_pre += dz * k;
            }
            w_re.push(damping - slope);
            icpt.push(log_pre);
            lin.push(match payoff {
                TransformPayoff::One => (1.0, 0.0),
                TransformPayoff::Linear => (0.0, 1.0),
                TransformPayoff::Call { strike } => {
                    let active = j > 0 && knots[j - 1].0 >= *strike;
                    if active {
                        (-strike, 1.0)
                    } else {
                        (0.0, 0.0)
                    }
                }
            });
        }

        // integrability at the infinite ends where the payoff is alive
        if lin[0] != (0.0, 0.0) && !(w_re[0] > 0.0) {
            return Err(Error::InvalidDamping(format!(
                "damping {damping} <= lower slope {}; the integrand diverges \
                 at -infinity",
                slope_at(weight, 0)
            )));
        }
        if lin[m] != (0.0, 0.0) && !(w_re[m] < 0.0) {
            return Err(Error::InvalidDamping(format!(
                "damping {damping} >= upper slope {}; the integrand diverges \
                 at +infinity",
                weight.total_slope()
            )));
        }

        Ok(DampedTransform {
            knots: knots.into_iter().map(|(k, _)| k).collect(),
            w_re,
            icpt,
            lin,
        })
    }

    /// Transform value at frequency `s`.
    pub fn eval(&self, s: f64) -> Complex64 {
        let m = self.knots.len();
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..=m {
            let (a, b) = self.lin[j];
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let w = Complex64::new(self.w_re[j], -s);
            let contrib = if j == 0 {
                // (-inf, K_0]: e^{w K}((A + B K)/w - B/w^2)
                let k = self.knots[0];
                let ew = (w * k + self.icpt[j]).exp();
                ew * ((a + b * k) / w - b / (w * w))
            } else if j == m {
                // [K_{m-1}, inf): -e^{w K}((A + B K)/w - B/w^2)
                let k = self.knots[m - 1];
                let ew = (w * k + self.icpt[j]).exp();
                -ew * ((a + b * k) / w - b / (w * w))
            } else {
                let (ka, kb) = (self.knots[j - 1], self.knots[j]);
                let d = kb - ka;
                let z = w * d;
                let ew = (w * ka + self.icpt[j]).exp();
                ew * d * (phi1(z) * (a + b * ka) + phi2(z) * (b * d))
            };
            total += contrib;
        }
        total
    }
}

fn slope_at(weight: &TiltedWeight, interval: usize) -> f64 {
    weight.zeta_linear + weight.zeta_calls.iter().take(interval).sum::<f64>()
}

/// Telescoped closed form for the transform of `e^{alpha x} x z(x)` in the
/// equal-tilt market (one linear security plus calls, all tilted by
/// `gamma`). Test cross-check only; see module docs.
pub fn printed_stock_transform(
    s: f64,
    gamma: f64,
    strikes: &[f64],
    alpha: f64,
) -> Complex64 {
    let mut tot = Complex64::new(0.0, 0.0);
    let mut pre = 0.0_f64;
    for (idx, k) in strikes.iter().enumerate() {
        let j = (idx + 1) as f64;
        let c0 = Complex64::new(alpha - j * gamma, -s);
        let c1 = Complex64::new(alpha - (j + 1.0) * gamma, -s);
        let e = (c0 * *k + pre).exp();
        tot += e * ((c1 * c1).inv() - (c0 * c0).inv() - (c0 * c1).inv() * (k * gamma));
        pre += gamma * k;
    }
    tot
}

/// Telescoped closed form for the transform of `e^{beta x} z(x)`; same
/// setting and caveats as [`printed_stock_transform`].
pub fn printed_weight_transform(s: f64, gamma: f64, strikes: &[f64], beta: f64) -> Complex64 {
    let mut tot = Complex64::new(0.0, 0.0);
    let mut pre = 0.0_f64;
    for (idx, k) in strikes.iter().enumerate() {
        let j = (idx + 1) as f64;
        let c0 = Complex64::new(beta - j * gamma, -s);
        let c1 = Complex64::new(beta - (j + 1.0) * gamma, -s);
        tot += (c0 * *k + pre).exp() * (-(gamma / (c0 * c1)));
        pre += gamma * k;
    }
    tot
}

/// Telescoped closed form for the transform of `(x - K_k)^+ z(x)` (no
/// damping needed); `k` is a zero-based index into `strikes`.
pub fn printed_call_transform(s: f64, gamma: f64, strikes: &[f64], k: usize) -> Complex64 {
    let n = strikes.len();
    assert!(k < n, "call index out of range");
    let kk = strikes[k];
    let pre_k: f64 = gamma * strikes[..k].iter().sum::<f64>();
    let j = (k + 1) as f64;
    let d0 = Complex64::new(-j * gamma, -s);
    let d1 = Complex64::new(-(j + 1.0) * gamma, -s);
    let mut tot = (d0 * kk + pre_k).exp() / (d1 * d1);
    let mut pre = pre_k + gamma * kk;
    for idx in (k + 1)..n {
        let kj = strikes[idx];
        let j = (idx + 1) as f64;
        let d0 = Complex64::new(-j * gamma, -s);
        let d1 = Complex64::new(-(j + 1.0) * gamma, -s);
        tot += (d0 * kj + pre).exp()
            * ((d1 * d1).inv() - (d0 * d0).inv() - (d0 * d1).inv() * ((kj - kk) * gamma));
        pre += gamma * kj;
    }
    tot
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force transform by trapezoid on a wide grid.
    fn numeric_ft(f: &dyn Fn(f64) -> f64, s: f64, lo: f64, hi: f64, n: usize) -> Complex64 {
        let dx = (hi - lo) / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let x = lo + i as f64 * dx;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += Complex64::new(0.0, -s * x).exp() * (f(x) * w);
        }
        acc * dx
    }

    fn test_weight() -> TiltedWeight {
        TiltedWeight::new(0.2, &[(0.9, 0.2), (1.0, 0.2), (1.15, 0.2)]).unwrap()
    }

    #[test]
    fn interval_form_matches_numeric_ft() {
        let w = test_weight();
        let alpha = 0.5; // (0.2, 0.8) window
        for (payoff, damp) in [
            (TransformPayoff::Linear, alpha),
            (TransformPayoff::One, alpha),
            (TransformPayoff::Call { strike: 1.0 }, 0.0),
            (TransformPayoff::Call { strike: 1.07 }, 0.0), // kink off the grid
        ] {
            let t = DampedTransform::new(&w, &payoff, damp).unwrap();
            for s in [0.0, 0.7, 3.3] {
                let got = t.eval(s);
                let brute = numeric_ft(
                    &|x| payoff.eval(x) * (-w.exponent(x)).exp() * (damp * x).exp(),
                    s,
                    -120.0,
                    160.0,
                    2_000_000,
                );
                assert!(
                    (got - brute).norm() < 5e-7,
                    "payoff {payoff:?} s={s}: {got} vs {brute}"
                );
            }
        }
    }

    #[test]
    fn interval_form_matches_printed_forms() {
        let gamma = 0.2;
        let strikes = [0.9, 1.0, 1.15];
        let w = TiltedWeight::new(
            gamma,
            &strikes.iter().map(|k| (*k, gamma)).collect::<Vec<_>>(),
        )
        .unwrap();
        let alpha = (strikes.len() as f64 + 2.0) * gamma / 2.0;
        let stock = DampedTransform::new(&w, &TransformPayoff::Linear, alpha).unwrap();
        let den = DampedTransform::new(&w, &TransformPayoff::One, alpha).unwrap();
        let call1 = DampedTransform::new(&w, &TransformPayoff::Call { strike: 1.0 }, 0.0).unwrap();
        for s in [0.0, 0.4, 1.9, 8.7, 40.1] {
            let a = stock.eval(s);
            let b = printed_stock_transform(s, gamma, &strikes, alpha);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "stock s={s}: {a} vs {b}");
            let a = den.eval(s);
            let b = printed_weight_transform(s, gamma, &strikes, alpha);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "den s={s}: {a} vs {b}");
            let a = call1.eval(s);
            let b = printed_call_transform(s, gamma, &strikes, 1);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "call s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_supply_single_market_closed_form() {
        // weight from one linear security; priced call at K: transform is
        // e^{-(zeta + is) K} / (zeta + is)^2
        let zeta = 0.2;
        let k = 1.0;
        let w = TiltedWeight::new(zeta, &[]).unwrap();
        let t = DampedTransform::new(&w, &TransformPayoff::Call { strike: k }, 0.0).unwrap();
        let at0 = t.eval(0.0);
        assert!((at0.re - 20.468268826949544).abs() < 1e-12, "{at0}");
        assert!(at0.im.abs() < 1e-15);
        for s in [0.3, 2.0] {
            let c = Complex64::new(zeta, s);
            let want = (-c * k).exp() / (c * c);
            assert!((t.eval(s) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn damping_window_enforced() {
        let w = test_weight();
        // linear payoff: window (0.2, 0.8)
        assert!(DampedTransform::new(&w, &TransformPayoff::Linear, 0.1).is_err());
        assert!(DampedTransform::new(&w, &TransformPayoff::Linear, 0.9).is_err());
        assert!(DampedTransform::new(&w, &TransformPayoff::Linear, 0.5).is_ok());
        // call payoff: no lower constraint
        assert!(DampedTransform::new(&w, &TransformPayoff::Call { strike: 1.0 }, -0.3).is_ok());
        let bare = TiltedWeight::new(0.2, &[]).unwrap();
        assert!(matches!(
            bare.default_damping(&TransformPayoff::Linear),
            Err(Error::InvalidDamping(_))
        ));
        assert!((test_weight().default_damping(&TransformPayoff::One).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicate_strikes_merge() {
        let w = TiltedWeight::new(0.1, &[(1.0, 0.2), (1.0, 0.3)]).unwrap();
        assert_eq!(w.strikes(), &[1.0]);
        assert!((w.total_slope() - 0.6).abs() < 1e-15);
        // exponent at x = 2: 0.1*2 + 0.5*(2-1) = 0.7
        assert!((w.exponent(2.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn phi_kernels_match_series_and_closed_form() {
        for z in [
            Complex64::new(1e-9, 3e-9),
            Complex64::new(0.049, 0.001),
            Complex64::new(0.051, 0.0),
            Complex64::new(-2.0, 5.0),
        ] {
            let p1 = phi1(z);
            let p2 = phi2(z);
            // reference by midpoint-series: high-order direct sums
            let mut ref1 = Complex64::new(0.0, 0.0);
            let mut ref2 = Complex64::new(0.0, 0.0);
            let mut zp = Complex64::new(1.0, 0.0);
            let mut fact = 1.0;
            for m in 0..60 {
                ref1 += zp / (fact * (m as f64 + 1.0));
                ref2 += zp / (fact * (m as f64 + 2.0));
                zp *= z;
                fact *= m as f64 + 1.0;
            }
            assert!((p1 - ref1).norm() < 1e-13 * (1.0 + ref1.norm()), "phi1({z})");
            assert!((p2 - ref2).norm() < 1e-13 * (1.0 + ref2.norm()), "phi2({z})");
        }
    }
}
