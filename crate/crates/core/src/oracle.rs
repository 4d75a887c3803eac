//! Monte Carlo oracle: simulate terminal factor levels and form
//! tilted-ratio price estimates with delta-method error bars.
//!
//! Everything here is independent of the transform machinery, so agreement
//! between the two routes is a genuine cross-check. Simulation is
//! deterministic for a fixed seed regardless of thread count: work is split
//! into a fixed number of partitions, each driven by its own counter-mode
//! RNG stream, and results are concatenated in partition order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::PayoffKind;
use crate::error::{Error, Result};
use crate::heston::HestonParams;
use crate::oujump::OuJumpParams;

/// Partition count is fixed (not tied to the thread pool) so results are
/// byte-identical on any machine.
const PARTITIONS: u64 = 256;

/// A ratio estimate with its delta-method standard error and weight
/// diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub estimator: String,
    /// Largest single-path share of the total tilting weight.
    pub max_weight_share: f64,
    /// Set when one path carries more than 1% of the weight; estimates are
    /// then dominated by rare tails and the error bar is unreliable.
    pub concentrated: bool,
}

fn partition_sizes(n_paths: usize) -> Vec<usize> {
    let base = n_paths / PARTITIONS as usize;
    let extra = n_paths % PARTITIONS as usize;
    (0..PARTITIONS as usize)
        .map(|i| base + usize::from(i < extra))
        .collect()
}

/// Independent reproducible generator: one seed, one stream index per
/// partition/path, no overlap between streams.
pub fn stream_rng(seed: u64, idx: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// Terminal (variance, factor) samples under the square-root variance model:
/// full-truncation Euler for the variance, exact Gaussian increments for the
/// factor conditional on the variance path.
pub fn simulate_heston_pairs(
    p: &HestonParams,
    horizon: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    p.validate()?;
    if !(horizon > 0.0) || n_steps == 0 || n_paths == 0 {
        return Err(Error::InvalidParameter(
            "horizon, n_paths and n_steps must be positive".into(),
        ));
    }
    let dt = horizon / n_steps as f64;
    let sdt = dt.sqrt();
    let sizes = partition_sizes(n_paths);
    let chunks: Vec<Vec<(f64, f64)>> = (0..PARTITIONS)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream_rng(seed, idx);
            let n = sizes[idx as usize];
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let mut v = p.v0;
                let mut x = p.x0;
                for _ in 0..n_steps {
                    let vp = v.max(0.0);
                    let root = vp.sqrt() * sdt;
                    let zv: f64 = rng.sample(StandardNormal);
                    let zx: f64 = rng.sample(StandardNormal);
                    x += p.mu * dt + root * zx;
                    v += (p.kappa - p.lambda * vp) * dt + p.sigma * root * zv;
                }
                out.push((v, x));
            }
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Terminal factor samples only; same streams and draws as the paired form.
pub fn simulate_heston_terminal(
    p: &HestonParams,
    horizon: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(simulate_heston_pairs(p, horizon, n_paths, n_steps, seed)?
        .into_iter()
        .map(|(_, x)| x)
        .collect())
}

/// Terminal factor samples under the jump model, by exact event-driven
/// simulation (no discretization bias): exponential waiting times, two-sided
/// exponential jump sizes, deterministic reversion between events.
pub fn simulate_oujump_terminal(
    p: &OuJumpParams,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    p.validate()?;
    if !(horizon > 0.0) || n_paths == 0 {
        return Err(Error::InvalidParameter("horizon and n_paths must be positive".into()));
    }
    let wait = Exp::new(p.kappa)
        .map_err(|e| Error::InvalidParameter(format!("jump intensity: {e}")))?;
    let size = Exp::new(p.theta)
        .map_err(|e| Error::InvalidParameter(format!("jump decay: {e}")))?;
    let sizes = partition_sizes(n_paths);
    let chunks: Vec<Vec<f64>> = (0..PARTITIONS)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream_rng(seed, idx);
            let n = sizes[idx as usize];
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let mut t = 0.0_f64;
                let mut x = p.x0;
                loop {
                    let dt = wait.sample(&mut rng);
                    if t + dt >= horizon {
                        x = p.mu + (x - p.mu) * (-p.lambda * (horizon - t)).exp();
                        break;
                    }
                    t += dt;
                    x = p.mu + (x - p.mu) * (-p.lambda * dt).exp();
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    x += sign * size.sample(&mut rng);
                }
                out.push(x);
            }
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Equilibrium-price estimates from terminal samples.
///
/// The tilting weight per path is `exp(-sum_k gt_k f_k(x))` over
/// `weighting` (payoff, adjusted-risk-aversion) pairs; each payoff in
/// `priced` is then estimated as the weighted-ratio
/// `E[g(x) w] / E[w]`. Weights are normalized by the most-tilted path
/// before exponentiation, so no overflow is possible.
pub fn ratio_estimates(
    samples: &[f64],
    weighting: &[(PayoffKind, f64)],
    priced: &[PayoffKind],
) -> Result<Vec<OracleEstimate>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let mut exponents = vec![0.0_f64; n];
    for (i, &x) in samples.iter().enumerate() {
        exponents[i] = weighting.iter().map(|(pay, gt)| gt * pay.eval(x)).sum();
    }
    let min_e = exponents.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = exponents.iter().map(|e| (-(e - min_e)).exp()).collect();

    let w_sum: f64 = weights.iter().sum();
    let w_mean = w_sum / n as f64;
    let max_w = weights.iter().cloned().fold(0.0_f64, f64::max);
    let max_weight_share = max_w / w_sum;
    let concentrated = max_weight_share > 0.01;

    let mut out = Vec::with_capacity(priced.len());
    for pay in priced {
        let mut a_sum = 0.0;
        for (x, w) in samples.iter().zip(&weights) {
            a_sum += pay.eval(*x) * w;
        }
        let a_mean = a_sum / n as f64;
        let value = a_mean / w_mean;

        // delta-method variance of the ratio estimator
        let (mut s_aa, mut s_ab, mut s_bb) = (0.0, 0.0, 0.0);
        for (x, w) in samples.iter().zip(&weights) {
            let da = pay.eval(*x) * w - a_mean;
            let db = w - w_mean;
            s_aa += da * da;
            s_ab += da * db;
            s_bb += db * db;
        }
        let nf = (n - 1) as f64;
        let var = (s_aa / nf - 2.0 * value * (s_ab / nf) + value * value * (s_bb / nf))
            / (n as f64 * w_mean * w_mean);
        out.push(OracleEstimate {
            value,
            std_error: var.max(0.0).sqrt(),
            n_paths: n,
            estimator: "tilted-ratio".to_string(),
            max_weight_share,
            concentrated,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::AffineModel;

    fn heston() -> HestonParams {
        HestonParams { mu: 0.1, kappa: 0.006, lambda: 0.2, sigma: 0.3, v0: 0.03, x0: 1.0 }
    }

    fn oujump() -> OuJumpParams {
        OuJumpParams { lambda: 2.0, mu: 1.0, kappa: 30.0, theta: 30.0, x0: 1.0 }
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let p = heston();
        let a = simulate_heston_terminal(&p, 0.25, 1000, 20, 42).unwrap();
        let b = simulate_heston_terminal(&p, 0.25, 1000, 20, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_heston_terminal(&p, 0.25, 1000, 20, 43).unwrap();
        assert_ne!(a, c);

        let q = oujump();
        let a = simulate_oujump_terminal(&q, 0.1, 1000, 42).unwrap();
        let b = simulate_oujump_terminal(&q, 0.1, 1000, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heston_terminal_moments_agree() {
        let p = heston();
        let xs = simulate_heston_terminal(&p, 0.5, 60_000, 100, 7).unwrap();
        let n = xs.len() as f64;
        let mean: f64 = xs.iter().sum::<f64>() / n;
        let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let (m0, v0) = p.terminal_moments(0.5, &[p.v0, p.x0]);
        // SE of the mean ~ sqrt(v0/n)
        assert!((mean - m0).abs() < 4.0 * (v0 / n).sqrt(), "mean {mean} vs {m0}");
        assert!((var - v0).abs() < 0.05 * v0, "var {var} vs {v0}");
    }

    #[test]
    fn oujump_terminal_moments_and_atom_agree() {
        let p = oujump();
        let tau = 0.1;
        let xs = simulate_oujump_terminal(&p, tau, 60_000, 11).unwrap();
        let n = xs.len() as f64;
        let mean: f64 = xs.iter().sum::<f64>() / n;
        let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let (m0, v0) = p.terminal_moments(tau, &[p.x0]);
        assert!((mean - m0).abs() < 4.0 * (v0 / n).sqrt(), "mean {mean} vs {m0}");
        assert!((var - v0).abs() < 0.06 * v0, "var {var} vs {v0}");

        // zero-jump paths land exactly on the reverted level; their share is
        // the atom mass
        let atom = p.terminal_atom(tau, &[p.x0]).unwrap();
        let hits = xs.iter().filter(|x| **x == atom.location).count() as f64 / n;
        let se = (atom.mass * (1.0 - atom.mass) / n).sqrt();
        assert!((hits - atom.mass).abs() < 4.0 * se, "atom share {hits} vs {}", atom.mass);
    }

    #[test]
    fn ratio_estimate_matches_hand_computation() {
        // two samples {0, 1}, linear payoff, gt = 1:
        // R = e^{-1} / (1 + e^{-1}) = 1 / (1 + e)
        let est = ratio_estimates(
            &[0.0, 1.0],
            &[(PayoffKind::Linear, 1.0)],
            &[PayoffKind::Linear],
        )
        .unwrap();
        assert!((est[0].value - 1.0 / (1.0 + std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn standard_error_scales_with_paths() {
        let p = heston();
        let small = simulate_heston_terminal(&p, 0.5, 10_000, 50, 3).unwrap();
        let large = simulate_heston_terminal(&p, 0.5, 160_000, 50, 3).unwrap();
        let w = [(PayoffKind::Linear, 0.2)];
        let pr = [PayoffKind::Linear];
        let se_small = ratio_estimates(&small, &w, &pr).unwrap()[0].std_error;
        let se_large = ratio_estimates(&large, &w, &pr).unwrap()[0].std_error;
        let ratio = se_small / se_large;
        assert!((ratio - 4.0).abs() < 1.0, "SE ratio {ratio} (expect ~4)");
    }

    #[test]
    fn concentration_flag_trips_on_dominant_path() {
        let mut xs = vec![1.0_f64; 500];
        xs.push(-40.0); // weight e^{40} relative to the rest
        let est = ratio_estimates(&xs, &[(PayoffKind::Linear, 1.0)], &[PayoffKind::Linear])
            .unwrap();
        assert!(est[0].concentrated);
        assert!(est[0].max_weight_share > 0.99);
        let tame = ratio_estimates(
            &vec![1.0, 1.1, 0.9, 1.05, 0.95].repeat(100),
            &[(PayoffKind::Linear, 1.0)],
            &[PayoffKind::Linear],
        )
        .unwrap();
        assert!(!tame[0].concentrated);
    }

    #[test]
    fn zero_supply_payoff_prices_under_foreign_weight() {
        // weight from the linear payoff only; priced call not in the weight
        let xs: Vec<f64> = (0..2000).map(|i| 0.5 + (i as f64) * 1e-3).collect();
        let est = ratio_estimates(
            &xs,
            &[(PayoffKind::Linear, 0.3)],
            &[PayoffKind::Call { strike: 1.5 }],
        )
        .unwrap();
        // brute force
        let w: Vec<f64> = xs.iter().map(|x| (-0.3 * x).exp()).collect();
        let num: f64 = xs.iter().zip(&w).map(|(x, w)| (x - 1.5).max(0.0) * w).sum();
        let den: f64 = w.iter().sum();
        assert!((est[0].value - num / den).abs() < 1e-12);
    }
}
