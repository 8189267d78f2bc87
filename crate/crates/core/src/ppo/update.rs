use serde::{Deserialize, Serialize};

use super::buffer::{normalize_advantages, RolloutBuffer};
use super::config::PpoConfig;
use crate::neural::{clip_grad_norm, Adam, Differentiable, GaussianPolicy, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub grad_norm: f64,
}

/// Clipped-surrogate loss over a full batch and its gradient with respect to
/// the policy parameters. Returns `(loss, grad, approx_kl, clip_frac)`.
pub fn surrogate_loss_and_grad<N: Differentiable>(
    policy: &GaussianPolicy<N>,
    buf: &RolloutBuffer,
    advantages: &[f64],
    clip_coeff: f64,
) -> (f64, Vec<f64>, f64, f64) {
    let n = buf.len() as f64;
    let mut grad = vec![0.0; policy.num_params()];
    let (mut loss, mut kl, mut clipped) = (0.0, 0.0, 0usize);
    for i in 0..buf.len() {
        let new_logp = policy.log_prob(&buf.obs[i], buf.actions[i]);
        let log_ratio = new_logp - buf.log_probs[i];
        let ratio = log_ratio.exp();
        let a = advantages[i];
        let unclipped = -a * ratio;
        let clipped_term = -a * ratio.clamp(1.0 - clip_coeff, 1.0 + clip_coeff);
        loss += unclipped.max(clipped_term);
        kl += (ratio - 1.0) - log_ratio;
        if (ratio - 1.0).abs() > clip_coeff {
            clipped += 1;
        }
        if unclipped >= clipped_term {
            // d(-a * ratio)/d(logp) = -a * ratio
            policy.log_prob_backward(&buf.obs[i], buf.actions[i], -a * ratio / n, &mut grad);
        }
    }
    (loss / n, grad, kl / n, clipped as f64 / n)
}

/// Mean squared value error, scaled by `vf_coef`, and its gradient.
pub fn value_loss_and_grad(critic: &Mlp, buf: &RolloutBuffer, vf_coef: f64) -> (f64, Vec<f64>) {
    let n = buf.len() as f64;
    let mut grad = vec![0.0; critic.num_params()];
    let mut mse = 0.0;
    for i in 0..buf.len() {
        let (v, cache) = critic.forward_cached(&buf.obs[i]);
        let err = v[0] - buf.returns[i];
        mse += err * err;
        critic.backward(&cache, &[vf_coef * 2.0 * err / n], &mut grad);
    }
    (vf_coef * mse / n, grad)
}

/// Optimizes policy and critic on one rollout for `update_epochs` full-batch
/// epochs. Statistics are those of the last epoch. On a non-finite loss the
/// networks are left as they were before the failing epoch.
pub fn ppo_update<N: Differentiable>(
    policy: &mut GaussianPolicy<N>,
    critic: &mut Mlp,
    actor_opt: &mut Adam,
    critic_opt: &mut Adam,
    buf: &RolloutBuffer,
    config: &PpoConfig,
    lr: f64,
) -> Result<UpdateStats> {
    if buf.advantages.len() != buf.len() || buf.returns.len() != buf.len() {
        return Err(Error::State("rollout buffer has no advantages; call finish() first".into()));
    }
    let adv = normalize_advantages(&buf.advantages);
    let mut stats = UpdateStats::default();
    for epoch in 0..config.update_epochs {
        let (pl, mut pg, kl, cf) = surrogate_loss_and_grad(policy, buf, &adv, config.clip_coeff);
        let (vl, mut vg) = value_loss_and_grad(critic, buf, config.vf_coef);
        let entropy = policy.entropy();
        if !(pl.is_finite() && vl.is_finite() && entropy.is_finite()) {
            return Err(Error::NonFinite(format!(
                "loss at epoch {epoch}: policy {pl}, value {vl}, entropy {entropy}"
            )));
        }
        // entropy depends only on log_std, the last policy parameter
        if let Some(g) = pg.last_mut() {
            *g -= config.ent_coef;
        }
        let grad_norm = clip_grad_norm(&mut [&mut pg, &mut vg], config.max_grad_norm);
        if !grad_norm.is_finite() {
            return Err(Error::NonFinite(format!("gradient norm at epoch {epoch}")));
        }
        let mut p = policy.params();
        actor_opt.step(&mut p, &pg, lr);
        policy.set_params(&p);
        let mut c = critic.params();
        critic_opt.step(&mut c, &vg, lr);
        critic.set_params(&c);
        stats = UpdateStats {
            policy_loss: pl,
            value_loss: vl,
            entropy,
            approx_kl: kl,
            clip_frac: cf,
            grad_norm,
        };
    }
    Ok(stats)
}
