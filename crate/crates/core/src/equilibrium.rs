//! Agent aggregation for the exponential-utility equilibrium.
//!
//! A finite set of agents with constant absolute risk aversions `gamma_a` and
//! random endowments `eta_a` (in units of terminal payoffs) trades `n` shares
//! of each security. Aggregation is fully explicit: the representative risk
//! aversion is the harmonic-type mean `gamma = (sum_a 1/gamma_a)^{-1}`, and
//! every equilibrium quantity depends on endowments only through the
//! aggregate `eta = sum_a eta_a` via the adjusted risk aversions
//! `gamma_tilde_k = gamma (eta_k + n_k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One agent: risk aversion and per-payoff endowment weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub risk_aversion: f64,
    pub endowment: Vec<f64>,
}

/// Payoff of one traded security as a function of the terminal factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffKind {
    /// Pays the factor itself (weight 1 on its slot).
    Linear,
    /// Pays `(X_T - strike)^+`.
    Call { strike: f64 },
}

impl PayoffKind {
    /// Terminal payoff as a function of the factor level.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PayoffKind::Linear => x,
            PayoffKind::Call { strike } => (x - strike).max(0.0),
        }
    }
}

/// The primitive market data: agents and net supplies per security.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub agents: Vec<AgentSpec>,
    pub supply: Vec<f64>,
}

/// Aggregated quantities every pricing formula consumes.
#[derive(Debug, Clone)]
pub struct Aggregates {
    /// Representative risk aversion `gamma`.
    pub gamma: f64,
    /// Aggregate endowment `eta = sum_a eta_a`, one entry per security.
    pub eta: Vec<f64>,
    /// Adjusted risk aversions `gamma_tilde = gamma * (eta + n)`.
    pub gamma_tilde: Vec<f64>,
}

impl MarketSpec {
    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidParameter("no agents".into()));
        }
        let m = self.supply.len();
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.risk_aversion > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "agent {i}: risk aversion {} must be positive",
                    a.risk_aversion
                )));
            }
            if a.endowment.len() != m {
                return Err(Error::InvalidParameter(format!(
                    "agent {i}: endowment length {} != supply length {m}",
                    a.endowment.len()
                )));
            }
        }
        Ok(())
    }

    pub fn aggregates(&self) -> Result<Aggregates> {
        self.validate()?;
        let inv_sum: f64 = self.agents.iter().map(|a| 1.0 / a.risk_aversion).sum();
        let gamma = 1.0 / inv_sum;
        let m = self.supply.len();
        let mut eta = vec![0.0; m];
        for a in &self.agents {
            for (e, w) in eta.iter_mut().zip(&a.endowment) {
                *e += w;
            }
        }
        let gamma_tilde = eta
            .iter()
            .zip(&self.supply)
            .map(|(e, n)| gamma * (e + n))
            .collect();
        Ok(Aggregates { gamma, eta, gamma_tilde })
    }

    /// Equilibrium holdings per agent:
    /// `theta_a = (gamma / gamma_a)(n + eta) - eta_a`.
    /// They clear by construction: `sum_a theta_a = n`.
    pub fn optimal_strategies(&self) -> Result<Vec<Vec<f64>>> {
        let agg = self.aggregates()?;
        Ok(self
            .agents
            .iter()
            .map(|a| {
                let scale = agg.gamma / a.risk_aversion;
                agg.eta
                    .iter()
                    .zip(&self.supply)
                    .zip(&a.endowment)
                    .map(|((e, n), own)| scale * (n + e) - own)
                    .collect()
            })
            .collect())
    }
}

/// `exp(-z)` with an overflow guard on the magnitude of the exponent.
pub fn pricing_weight(z: f64) -> Result<f64> {
    if z.abs() > crate::affine::EXPONENT_GUARD {
        return Err(Error::Overflow(z));
    }
    Ok((-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agent_market() -> MarketSpec {
        MarketSpec {
            agents: vec![
                AgentSpec { risk_aversion: 1.0, endowment: vec![1.0, 0.0] },
                AgentSpec { risk_aversion: 2.0, endowment: vec![0.0, 1.0] },
            ],
            supply: vec![1.0, 1.0],
        }
    }

    #[test]
    fn harmonic_aggregation() {
        let agg = two_agent_market().aggregates().unwrap();
        assert!((agg.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(agg.eta, vec![1.0, 1.0]);
        assert!((agg.gamma_tilde[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((agg.gamma_tilde[1] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn strategies_clear_and_match_closed_form() {
        let m = two_agent_market();
        let th = m.optimal_strategies().unwrap();
        // agent 1: (2/3)(2,2) - (1,0) = (1/3, 4/3)... with gamma_a = 1:
        // scale = 2/3, n + eta = (2,2) => (4/3,4/3) - (1,0) = (1/3, 4/3)
        assert!((th[0][0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((th[0][1] - 4.0 / 3.0).abs() < 1e-14);
        // agent 2: scale = 1/3 => (2/3,2/3) - (0,1) = (2/3, -1/3)
        assert!((th[1][0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((th[1][1] + 1.0 / 3.0).abs() < 1e-14);
        // clearing
        for k in 0..2 {
            let total: f64 = th.iter().map(|t| t[k]).sum();
            assert!((total - m.supply[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn single_agent_reduces_to_own_aversion() {
        let m = MarketSpec {
            agents: vec![AgentSpec { risk_aversion: 0.7, endowment: vec![0.0] }],
            supply: vec![2.0],
        };
        let agg = m.aggregates().unwrap();
        assert!((agg.gamma - 0.7).abs() < 1e-15);
        assert!((agg.gamma_tilde[0] - 1.4).abs() < 1e-15);
        let th = m.optimal_strategies().unwrap();
        assert!((th[0][0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weight_guard_trips_on_overflow() {
        assert!(pricing_weight(650.0).is_ok());
        assert!(matches!(pricing_weight(750.0), Err(Error::Overflow(_))));
        assert!(matches!(pricing_weight(-750.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn rejects_mismatched_endowment_length() {
        let m = MarketSpec {
            agents: vec![AgentSpec { risk_aversion: 1.0, endowment: vec![1.0] }],
            supply: vec![1.0, 2.0],
        };
        assert!(m.aggregates().is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(1000))]

        #[test]
        fn strategies_always_clear(
            aversions in proptest::collection::vec(0.01_f64..50.0, 1..8),
            seeds in proptest::collection::vec(-5.0_f64..5.0, 1..6),
            supply in proptest::collection::vec(-3.0_f64..3.0, 1..6),
        ) {
            let m = supply.len();
            let agents: Vec<AgentSpec> = aversions
                .iter()
                .enumerate()
                .map(|(i, g)| AgentSpec {
                    risk_aversion: *g,
                    endowment: (0..m)
                        .map(|k| seeds[(i + k) % seeds.len()] * (1.0 + k as f64 * 0.25))
                        .collect(),
                })
                .collect();
            let spec = MarketSpec { agents, supply: supply.clone() };
            let th = spec.optimal_strategies().unwrap();
            for k in 0..m {
                let total: f64 = th.iter().map(|t| t[k]).sum();
                let scale: f64 =
                    1.0 + th.iter().map(|t| t[k].abs()).sum::<f64>();
                proptest::prop_assert!(
                    (total - supply[k]).abs() <= 1e-12 * scale,
                    "security {}: holdings sum {} vs supply {}",
                    k,
                    total,
                    supply[k]
                );
            }
        }
    }
}
