mod common;

use kanlb::neural::{ActorKind, Differentiable};
use kanlb::ppo::{
    anneal_lr, collect_rollout, init_actor, init_critic, surrogate_loss_and_grad, BanditEnv, EpisodicEnv,
    PpoConfig, RlEnv, Trainer,
};
use kanlb::neural::GaussianPolicy;
use kanlb::simnet::{RewardKind, SimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rollout(kind: ActorKind, seed: u64) -> (GaussianPolicy<kanlb::neural::ActorNet>, kanlb::ppo::RolloutBuffer) {
    let config = PpoConfig::default();
    let policy = GaussianPolicy::new(init_actor(kind, &config), config.init_log_std);
    let critic = init_critic(&config);
    let mut env = EpisodicEnv::new(SimParams::default(), 500).unwrap();
    let mut obs = env.reset().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // start mid-episode so the batch straddles an episode boundary
    for _ in 0..30 {
        obs = env.step(0.0).unwrap().obs;
    }
    let buf = collect_rollout(&mut env, &mut obs, &policy, &critic, 50, RewardKind::Loss, &mut rng).unwrap();
    (policy, buf)
}

#[test]
fn rollouts_are_deterministic_and_fixed_length() {
    for kind in [ActorKind::Kan, ActorKind::Mlp] {
        let (_, a) = rollout(kind, 9);
        let (_, b) = rollout(kind, 9);
        assert_eq!(a.len(), 50);
        assert_eq!(a.episodes_finished, 1);
        assert_eq!(a.obs, b.obs);
        assert_eq!(a.actions, b.actions);
        assert_eq!(a.log_probs, b.log_probs);
        assert_eq!(a.rewards, b.rewards);
    }
}

#[test]
fn stored_log_probs_match_recomputation() {
    for kind in [ActorKind::Kan, ActorKind::Mlp] {
        let (policy, buf) = rollout(kind, 4);
        for i in 0..buf.len() {
            let sd = policy.std();
            let mean = policy.mean(&buf.obs[i]);
            let z = (buf.actions[i] - mean) / sd;
            let oracle = -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
            assert!((buf.log_probs[i] - oracle).abs() < 1e-10);
            assert!((policy.log_prob(&buf.obs[i], buf.actions[i]) - buf.log_probs[i]).abs() < 1e-10);
        }
    }
}

fn random_advantages(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

#[test]
fn surrogate_at_ratio_one_is_the_policy_gradient() {
    for kind in [ActorKind::Kan, ActorKind::Mlp] {
        let (policy, buf) = rollout(kind, 5);
        let adv = random_advantages(buf.len(), 1);
        let (loss, grad, kl, clip_frac) = surrogate_loss_and_grad(&policy, &buf, &adv, 0.2);
        let n = buf.len() as f64;
        let mut pg = vec![0.0; policy.num_params()];
        for i in 0..buf.len() {
            let ratio = (policy.log_prob(&buf.obs[i], buf.actions[i]) - buf.log_probs[i]).exp();
            assert!((ratio - 1.0).abs() < 1e-10);
            policy.log_prob_backward(&buf.obs[i], buf.actions[i], -adv[i] / n, &mut pg);
        }
        let expected_loss = -adv.iter().sum::<f64>() / n;
        assert!((loss - expected_loss).abs() < 1e-12);
        for (g, e) in grad.iter().zip(&pg) {
            assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
        assert!(kl.abs() < 1e-12);
        assert_eq!(clip_frac, 0.0);
    }
}

#[test]
fn clipped_objective_never_exceeds_unclipped() {
    let (policy, buf) = rollout(ActorKind::Mlp, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..50 {
        let mut moved = policy.clone();
        let p: Vec<f64> = moved.params().iter().map(|v| v + rng.random_range(-0.2..0.2)).collect();
        moved.set_params(&p);
        let adv = random_advantages(buf.len(), 100 + trial);
        for i in 0..buf.len() {
            let ratio = (moved.log_prob(&buf.obs[i], buf.actions[i]) - buf.log_probs[i]).exp();
            let clipped = (ratio * adv[i]).min(ratio.clamp(0.8, 1.2) * adv[i]);
            assert!(clipped <= ratio * adv[i]);
        }
        let (loss, ..) = surrogate_loss_and_grad(&moved, &buf, &adv, 0.2);
        let unclipped_loss = -(0..buf.len())
            .map(|i| (moved.log_prob(&buf.obs[i], buf.actions[i]) - buf.log_probs[i]).exp() * adv[i])
            .sum::<f64>()
            / buf.len() as f64;
        assert!(loss >= unclipped_loss - 1e-12);
    }
}

#[test]
fn learning_rate_schedule() {
    let c = PpoConfig::default();
    assert_eq!(anneal_lr(0, &c), 3e-3);
    assert!((anneal_lr(50_000, &c) - 1.5e-3).abs() < 1e-15);
    assert_eq!(anneal_lr(100_000, &c), 0.0);
}

fn smoke(kind: ActorKind, seed: u64) -> Trainer<kanlb::neural::ActorNet> {
    let config = PpoConfig {
        total_steps: 2_000,
        seed,
        ..PpoConfig::default()
    };
    let mut t = Trainer::for_actor(config.clone(), kind).unwrap();
    let mut env = EpisodicEnv::new(SimParams::default(), config.episode_seed_base).unwrap();
    t.run(&mut env).unwrap();
    t
}

#[test]
fn smoke_run_is_reproducible_with_falling_lr() {
    for kind in [ActorKind::Kan, ActorKind::Mlp] {
        let a = smoke(kind, 1);
        let b = smoke(kind, 1);
        assert_eq!(a.checkpoint(), b.checkpoint());
        assert_eq!(a.global_step, 2_000);
        assert_eq!(a.log.len(), 40);
        assert!(a.log.windows(2).all(|w| w[1].lr < w[0].lr));
        assert!(a.log.iter().all(|r| r.policy_loss.is_finite() && r.value_loss.is_finite()));
        assert_ne!(a.checkpoint(), smoke(kind, 2).checkpoint());
    }
}

#[test]
fn smoke_run_loss_reward_does_not_degrade() {
    let t = smoke(ActorKind::Kan, 1);
    let q = t.log.len() / 4;
    let first: f64 = t.log[..q].iter().map(|r| r.mean_reward_loss).sum::<f64>() / q as f64;
    let last: f64 = t.log[t.log.len() - q..].iter().map(|r| r.mean_reward_loss).sum::<f64>() / q as f64;
    assert!(last >= first, "first quartile {first}, last quartile {last}");
}

#[test]
fn bandit_mean_converges_to_the_optimum() {
    for kind in [ActorKind::Kan, ActorKind::Mlp] {
        let config = PpoConfig {
            total_steps: 200 * 50,
            ..PpoConfig::default()
        };
        let mut t = Trainer::for_actor(config, kind).unwrap();
        t.run(&mut BanditEnv { optimum: 0.3 }).unwrap();
        let m = t.policy.mean(&[0.0; 10]);
        assert!((m - 0.3).abs() <= 0.05, "{kind:?}: mean {m}");
    }
}
