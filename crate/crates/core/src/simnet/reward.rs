//! Reward signals. Both are costs (non-positive) normalized by the scaling
//! factor `S = beta / lambda_hat^alpha`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Utility,
    Loss,
}

impl RewardKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardKind::Utility => "utility",
            RewardKind::Loss => "loss",
        }
    }
}

impl std::str::FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utility" => Ok(RewardKind::Utility),
            "loss" => Ok(RewardKind::Loss),
            other => Err(Error::Config(format!("unknown reward kind '{other}'"))),
        }
    }
}

pub fn scaling_factor(lambda_hat: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(lambda_hat > 0.0) || !lambda_hat.is_finite() {
        return Err(Error::Domain(format!("lambda_hat must be positive, got {lambda_hat}")));
    }
    Ok(beta / lambda_hat.powf(alpha))
}

/// `-S (1 - mean_k min(1, delivered_k / desired_k))` over the main flows of
/// the step, given as `(delivered_bits, desired_bits)` pairs. Zero when no
/// flow was active.
pub fn reward_utility(flows: &[(f64, f64)], scale: f64) -> f64 {
    if flows.is_empty() {
        return 0.0;
    }
    let mean_sat = flows
        .iter()
        .map(|&(got, want)| if want > 0.0 { (got / want).min(1.0) } else { 1.0 })
        .sum::<f64>()
        / flows.len() as f64;
    -scale * (1.0 - mean_sat)
}

pub fn reward_loss(loss_ratio: f64, scale: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&loss_ratio) {
        return Err(Error::Domain(format!("loss ratio {loss_ratio} outside [0, 1]")));
    }
    Ok(-10.0 * scale * loss_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_factor_examples() {
        assert!((scaling_factor(0.2, 1.0, 0.2).unwrap() - 1.0).abs() < 1e-15);
        assert!((scaling_factor(0.25, 1.0, 0.2).unwrap() - 0.8).abs() < 1e-15);
        for l in [0.2, 0.23, 0.3] {
            assert_eq!(scaling_factor(l, 0.0, 0.2).unwrap(), 0.2);
        }
        assert!(scaling_factor(0.0, 1.0, 0.2).is_err());
        assert!(scaling_factor(-0.1, 1.0, 0.2).is_err());
    }

    #[test]
    fn utility_examples() {
        assert_eq!(reward_utility(&[(150.0, 150.0), (300.0, 150.0)], 0.8), 0.0);
        let r = reward_utility(&[(100.0, 100.0), (50.0, 100.0)], 0.8);
        assert!((r - (-0.2)).abs() < 1e-15);
        assert_eq!(reward_utility(&[(0.0, 150.0)], 0.7), -0.7);
        assert_eq!(reward_utility(&[], 0.7), 0.0);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(reward_loss(0.0, 0.8).unwrap(), 0.0);
        assert!((reward_loss(0.05, 0.8).unwrap() + 0.4).abs() < 1e-15);
        assert_eq!(reward_loss(1.0, 1.0).unwrap(), -10.0);
        assert!(reward_loss(1.5, 1.0).is_err());
        assert!(reward_loss(-0.1, 1.0).is_err());
    }
}
