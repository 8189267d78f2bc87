use rand::Rng;

use super::env::RlEnv;
use crate::neural::{Differentiable, GaussianPolicy, Mlp};
use crate::simnet::{ObsVector, RewardKind, OBS_DIM};
use crate::{Error, Result};

/// Transitions of one rollout plus the value of the state that follows it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub obs: Vec<[f64; OBS_DIM]>,
    /// Unclipped sampled actions.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub rewards_utility: Vec<f64>,
    pub rewards_loss: Vec<f64>,
    pub values: Vec<f64>,
    /// `dones[t]` is true when the state after step `t` is terminal.
    pub dones: Vec<bool>,
    pub bootstrap_value: f64,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub episodes_finished: usize,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn mean_reward(&self) -> f64 {
        mean(&self.rewards)
    }

    /// Fills `advantages` and `returns`.
    pub fn finish(&mut self, gamma: f64, lambda: f64) {
        let (adv, ret) = compute_gae(&self.rewards, &self.values, &self.dones, self.bootstrap_value, gamma, lambda);
        self.advantages = adv;
        self.returns = ret;
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Generalized advantage estimation. Returns `(advantages, returns)` with
/// `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut last = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap_value };
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        last = delta + gamma * lambda * nonterminal * last;
        adv[t] = last;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Standardizes to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let m = mean(adv);
    let var = adv.iter().map(|a| (a - m).powi(2)).sum::<f64>() / adv.len().max(1) as f64;
    let sd = var.sqrt() + 1e-8;
    adv.iter().map(|a| (a - m) / sd).collect()
}

/// Runs `n` steps from `obs`, resetting the environment whenever an episode
/// ends. `obs` is left at the state following the last step.
pub fn collect_rollout<E, N, R>(
    env: &mut E,
    obs: &mut ObsVector,
    policy: &GaussianPolicy<N>,
    critic: &Mlp,
    n: usize,
    reward_kind: RewardKind,
    rng: &mut R,
) -> Result<RolloutBuffer>
where
    E: RlEnv + ?Sized,
    N: Differentiable,
    R: Rng + ?Sized,
{
    let mut buf = RolloutBuffer::default();
    for _ in 0..n {
        let x = obs.to_array();
        let s = policy.sample(&x, rng);
        let v = critic.forward(&x)[0];
        if !s.action.is_finite() || !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "rollout produced action {} and value {v}",
                s.action
            )));
        }
        let out = env.step(s.env_action)?;
        buf.obs.push(x);
        buf.actions.push(s.action);
        buf.log_probs.push(s.log_prob);
        buf.values.push(v);
        buf.rewards.push(out.reward(reward_kind));
        buf.rewards_utility.push(out.reward_utility);
        buf.rewards_loss.push(out.reward_loss);
        buf.dones.push(out.done);
        if out.done {
            buf.episodes_finished += 1;
            *obs = env.reset()?;
        } else {
            *obs = out.obs;
        }
    }
    buf.bootstrap_value = critic.forward(&obs.to_array())[0];
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_step_does_not_bootstrap() {
        let (adv, ret) = compute_gae(&[1.0], &[0.25], &[true], 100.0, 0.99, 0.95);
        assert_eq!(adv, vec![0.75]);
        assert_eq!(ret, vec![1.0]);
    }

    #[test]
    fn normalized_has_zero_mean_unit_sd() {
        let a = normalize_advantages(&[1.0, 2.0, 3.0, 10.0]);
        assert!(mean(&a).abs() < 1e-12);
        let var = a.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!((var - 1.0).abs() < 1e-6);
    }
}
