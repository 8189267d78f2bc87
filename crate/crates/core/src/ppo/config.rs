use serde::{Deserialize, Serialize};

use crate::neural::SplineGrid;
use crate::simnet::RewardKind;
use crate::{Error, Result};

/// PPO hyperparameters. Defaults follow the published training setup where
/// it is given (steps, learning rate, discounting, epochs, clipping) and
/// common PPO practice elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub total_steps: u64,
    pub rollout_steps: usize,
    pub lr: f64,
    pub anneal_lr: bool,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub update_epochs: usize,
    pub clip_coeff: f64,
    pub reward_kind: RewardKind,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub max_grad_norm: f64,
    /// Scale training rewards by the running std of the discounted return.
    pub normalize_reward: bool,
    pub seed: u64,
    pub hidden_sizes: Vec<usize>,
    pub grid: SplineGrid,
    pub init_log_std: f64,
    /// Seeds of training episodes start here (evaluation uses other seeds).
    pub episode_seed_base: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            total_steps: 100_000,
            rollout_steps: 50,
            lr: 3e-3,
            anneal_lr: true,
            gamma: 0.99,
            gae_lambda: 0.95,
            update_epochs: 16,
            clip_coeff: 0.2,
            reward_kind: RewardKind::Loss,
            vf_coef: 0.5,
            ent_coef: 0.0,
            max_grad_norm: 0.5,
            normalize_reward: true,
            seed: 1,
            hidden_sizes: vec![64, 64],
            grid: SplineGrid::default(),
            init_log_std: 0.0,
            episode_seed_base: 1_000_000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("lr", self.lr),
            ("gamma", self.gamma),
            ("gae_lambda", self.gae_lambda),
            ("vf_coef", self.vf_coef),
            ("ent_coef", self.ent_coef),
            ("max_grad_norm", self.max_grad_norm),
            ("init_log_std", self.init_log_std),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if !(self.clip_coeff > 0.0 && self.clip_coeff < 1.0) {
            return Err(Error::Config(format!("clip_coeff must lie in (0, 1), got {}", self.clip_coeff)));
        }
        if self.lr < 0.0 || self.max_grad_norm <= 0.0 {
            return Err(Error::Config("lr must be >= 0 and max_grad_norm > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config("gamma and gae_lambda must lie in [0, 1]".into()));
        }
        if self.rollout_steps == 0 || self.update_epochs == 0 {
            return Err(Error::Config("rollout_steps and update_epochs must be positive".into()));
        }
        if self.total_steps < self.rollout_steps as u64 {
            return Err(Error::Config("total_steps must cover at least one rollout".into()));
        }
        self.grid.validate()
    }

    pub fn iterations(&self) -> u64 {
        self.total_steps / self.rollout_steps as u64
    }
}

/// `lr0 * (1 - global_step / total_steps)`, or `lr0` without annealing.
pub fn anneal_lr(global_step: u64, config: &PpoConfig) -> f64 {
    if !config.anneal_lr {
        return config.lr;
    }
    let frac = 1.0 - (global_step.min(config.total_steps) as f64) / config.total_steps as f64;
    config.lr * frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annealing_endpoints() {
        let c = PpoConfig::default();
        assert_eq!(anneal_lr(0, &c), 3e-3);
        assert_eq!(anneal_lr(c.total_steps, &c), 0.0);
        assert!((anneal_lr(c.total_steps / 2, &c) - 1.5e-3).abs() < 1e-18);
    }

    #[test]
    fn clip_coeff_range_checked() {
        let c = PpoConfig {
            clip_coeff: 1.0,
            ..PpoConfig::default()
        };
        assert!(c.validate().is_err());
        PpoConfig::default().validate().unwrap();
    }
}
