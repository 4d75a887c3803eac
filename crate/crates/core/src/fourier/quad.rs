//! Adaptive semi-infinite quadrature for oscillatory transform integrands.
//!
//! The positive half-line is covered by octaves `[0,1], [1,2], [2,4], ...`;
//! each octave is integrated with composite 64-point Gauss-Legendre panels,
//! doubling the panel count until the octave value stabilizes. Octaves are
//! appended until an empirical tail bound falls below tolerance: the bound
//! tracks `max |f(s)| (s^2 + 1)` over the newest octave, which majorizes the
//! remaining mass for any integrand decaying at least as fast as `1/s^2`
//! (every transform product priced here does).

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Octave budget; 44 octaves reach `s ~ 8e12`.
    pub max_octaves: usize,
    /// Oscillation hint in radians per unit `s`; panels are sized so each
    /// spans at most ~35 radians. Callers add their own payoff-geometry
    /// estimate on top.
    pub osc_scale: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-9, abs_tol: 1e-10, max_octaves: 44, osc_scale: 1.0 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0)
            || !(self.abs_tol > 0.0)
            || self.max_octaves == 0
        {
            return Err(Error::InvalidTolerance(format!(
                "rel_tol {} in (0,1), abs_tol {} > 0, max_octaves {} > 0 required",
                self.rel_tol, self.abs_tol, self.max_octaves
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    pub value: f64,
    /// Sum of per-octave refinement residuals plus the final tail bound.
    pub error_estimate: f64,
    pub evaluations: usize,
}

const GL_POINTS: usize = 64;

/// Nodes and weights of 64-point Gauss-Legendre on [-1, 1], computed once by
/// Newton iteration on the Legendre recurrence.
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x =
                (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// One composite pass over [lo, hi] with `panels` GL panels. Returns the
/// integral and `max |f(s)| (s^2 + 1)` over the evaluation grid.
fn composite_pass(
    f: &dyn Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    panels: usize,
) -> Result<(f64, f64)> {
    let (nodes, weights) = gauss_legendre();
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    let mut weighted_max = 0.0_f64;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let mid = a + 0.5 * width;
        let half = 0.5 * width;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let s = mid + half * x;
            let v = f(s)?;
            if !v.is_finite() {
                return Err(Error::QuadratureNotConverged(format!(
                    "integrand not finite at s = {s}"
                )));
            }
            acc += w * v;
            weighted_max = weighted_max.max(v.abs() * (s * s + 1.0));
        }
        total += half * acc;
    }
    Ok((total, weighted_max))
}

/// Integrate `f` over `[0, infinity)`.
pub fn integrate_semi_infinite(
    f: &dyn Fn(f64) -> Result<f64>,
    cfg: &QuadratureConfig,
) -> Result<QuadOutcome> {
    cfg.validate()?;
    // seed panel counts from the oscillation hint, but let doubling discover
    // the rest: far-tail octaves are wide yet carry almost no mass, so a
    // width-proportional seed would burn the budget before refining once
    const MAX_PANELS: usize = 16_384;
    let base_panels = |lo: f64, hi: f64| -> usize {
        (((hi - lo) * cfg.osc_scale / 35.0).ceil() as usize).clamp(1, 2_048)
    };

    let mut total = 0.0_f64;
    let mut err_acc = 0.0_f64;
    let mut evals = 0usize;
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;

    for _ in 0..cfg.max_octaves {
        // refine this octave until stable
        let mut panels = base_panels(lo, hi);
        let (mut val, _) = composite_pass(f, lo, hi, panels)?;
        evals += panels * GL_POINTS;
        let wmax;
        loop {
            let tol_here = 0.25 * (cfg.abs_tol + cfg.rel_tol * total.abs().max(val.abs()));
            if panels >= MAX_PANELS {
                return Err(Error::QuadratureNotConverged(format!(
                    "octave [{lo}, {hi}] did not stabilize within {MAX_PANELS} panels"
                )));
            }
            panels = (panels * 2).min(MAX_PANELS);
            let (val2, wmax2) = composite_pass(f, lo, hi, panels)?;
            evals += panels * GL_POINTS;
            let diff = (val2 - val).abs();
            val = val2;
            if diff <= tol_here {
                err_acc += diff;
                wmax = wmax2;
                break;
            }
        }
        total += val;

        // |f| <= wmax / (s^2+1) beyond hi gives tail mass <= wmax / hi;
        // the octave value itself guards slowly-settling oscillatory cases
        let tail = (wmax / hi).max(2.0 * val.abs());
        if tail <= cfg.abs_tol + cfg.rel_tol * total.abs() {
            return Ok(QuadOutcome { value: total, error_estimate: err_acc + tail, evaluations: evals });
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::QuadratureNotConverged(format!(
        "tail bound above tolerance after {} octaves (reached s = {lo})",
        cfg.max_octaves
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_table_is_symmetric_and_normalized() {
        let (nodes, weights) = gauss_legendre();
        assert_eq!(nodes.len(), 64);
        let wsum: f64 = weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        for i in 0..32 {
            assert!((nodes[i] + nodes[63 - i]).abs() < 1e-15);
            assert!((weights[i] - weights[63 - i]).abs() < 1e-15);
        }
        // integrate x^10 over [-1,1] exactly: 2/11
        let exact: f64 = nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * x.powi(10))
            .sum();
        assert!((exact - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        // int_0^inf e^{-s^2/2} ds = sqrt(pi/2)
        let f = |s: f64| Ok((-s * s / 2.0).exp());
        let out = integrate_semi_infinite(&f, &QuadratureConfig::default()).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!((out.value - exact).abs() < 1e-12, "{} vs {exact}", out.value);
    }

    #[test]
    fn lorentzian_integral_with_slow_tail() {
        // int_0^inf ds / (1 + s^2) = pi/2; decays exactly at the 1/s^2 rate
        // the tail bound assumes
        let f = |s: f64| Ok(1.0 / (1.0 + s * s));
        let cfg = QuadratureConfig { rel_tol: 1e-8, abs_tol: 1e-9, ..Default::default() };
        let out = integrate_semi_infinite(&f, &cfg).unwrap();
        let exact = std::f64::consts::FRAC_PI_2;
        assert!((out.value - exact).abs() < 1e-7, "{} vs {exact}", out.value);
    }

    #[test]
    fn oscillatory_integral() {
        // int_0^inf cos(a s) e^{-s} ds = 1 / (1 + a^2)
        let a = 12.0;
        let f = move |s: f64| Ok((a * s).cos() * (-s).exp());
        let cfg = QuadratureConfig { osc_scale: a, ..Default::default() };
        let out = integrate_semi_infinite(&f, &cfg).unwrap();
        let exact = 1.0 / (1.0 + a * a);
        assert!((out.value - exact).abs() < 1e-12, "{} vs {exact}", out.value);
    }

    #[test]
    fn error_propagates_from_integrand() {
        let f = |s: f64| {
            if s > 3.0 {
                Err(Error::Overflow(s))
            } else {
                Ok((-s).exp())
            }
        };
        // e^{-s} alone converges by s ~ 25, so the failure region is reached
        assert!(integrate_semi_infinite(&f, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_reported() {
        // constant integrand never satisfies the tail bound
        let f = |_s: f64| Ok(1.0);
        let cfg = QuadratureConfig { max_octaves: 6, ..Default::default() };
        assert!(matches!(
            integrate_semi_infinite(&f, &cfg),
            Err(Error::QuadratureNotConverged(_))
        ));
    }
}
