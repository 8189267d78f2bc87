use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{collect_rollout, mean};
use super::config::{anneal_lr, PpoConfig};
use super::env::RlEnv;
use super::normalize::RewardNormalizer;
use super::update::{ppo_update, UpdateStats};
use crate::neural::{ActorKind, ActorNet, Adam, Checkpoint, Differentiable, GaussianPolicy, KanLayer, Mlp};
use crate::simnet::{ObsVector, OBS_DIM};
use crate::Result;

const INIT_STREAM: u64 = 0x1417;
const ACTION_STREAM: u64 = 0xAC7;

/// One line of the training log, written after each update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: u64,
    pub mean_reward: f64,
    pub mean_reward_utility: f64,
    pub mean_reward_loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub lr: f64,
}

pub fn init_actor(kind: ActorKind, config: &PpoConfig) -> ActorNet {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM);
    match kind {
        ActorKind::Kan => ActorNet::Kan(KanLayer::new(OBS_DIM, 1, config.grid, &mut rng)),
        ActorKind::Mlp => {
            let sizes = layer_sizes(&config.hidden_sizes);
            ActorNet::Mlp(Mlp::orthogonal(&sizes, 0.01, &mut rng))
        }
    }
}

pub fn init_critic(config: &PpoConfig) -> Mlp {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(INIT_STREAM + 1);
    Mlp::orthogonal(&layer_sizes(&config.hidden_sizes), 0.01, &mut rng)
}

fn layer_sizes(hidden: &[usize]) -> Vec<usize> {
    let mut sizes = vec![OBS_DIM];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    sizes
}

/// Owns the networks, optimizers and sampling state of one PPO run, so a
/// caller can step it one update at a time and checkpoint in between.
#[derive(Debug, Clone)]
pub struct Trainer<N> {
    pub config: PpoConfig,
    pub policy: GaussianPolicy<N>,
    pub critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    rng: ChaCha8Rng,
    obs: Option<ObsVector>,
    reward_norm: Option<RewardNormalizer>,
    pub global_step: u64,
    pub log: Vec<TrainLogRow>,
    pub last_stats: UpdateStats,
}

impl Trainer<ActorNet> {
    pub fn for_actor(config: PpoConfig, kind: ActorKind) -> Result<Self> {
        let actor = init_actor(kind, &config);
        let critic = init_critic(&config);
        Self::new(config, actor, critic)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.policy.clone(),
            self.critic.clone(),
            self.config.reward_kind,
            self.config.seed,
            self.global_step,
        )
    }
}

impl<N: Differentiable + Clone> Trainer<N> {
    pub fn new(config: PpoConfig, mean_net: N, critic: Mlp) -> Result<Self> {
        config.validate()?;
        let policy = GaussianPolicy::new(mean_net, config.init_log_std);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(ACTION_STREAM);
        Ok(Self {
            actor_opt: Adam::new(policy.num_params()),
            critic_opt: Adam::new(critic.num_params()),
            policy,
            critic,
            rng,
            obs: None,
            reward_norm: config.normalize_reward.then(|| RewardNormalizer::new(config.gamma)),
            global_step: 0,
            log: Vec::new(),
            last_stats: UpdateStats::default(),
            config,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.global_step + self.config.rollout_steps as u64 > self.config.total_steps
    }

    /// One rollout and one update. On error the networks are restored to
    /// their state before this iteration.
    pub fn iterate<E: RlEnv + ?Sized>(&mut self, env: &mut E) -> Result<TrainLogRow> {
        let mut obs = match self.obs {
            Some(o) => o,
            None => env.reset()?,
        };
        let lr = anneal_lr(self.global_step, &self.config);
        let mut buf = collect_rollout(
            env,
            &mut obs,
            &self.policy,
            &self.critic,
            self.config.rollout_steps,
            self.config.reward_kind,
            &mut self.rng,
        )?;
        self.obs = Some(obs);
        let mean_reward = buf.mean_reward();
        if let Some(norm) = self.reward_norm.as_mut() {
            norm.apply(&mut buf.rewards, &buf.dones);
        }
        buf.finish(self.config.gamma, self.config.gae_lambda);
        let snapshot = (self.policy.clone(), self.critic.clone(), self.actor_opt.clone(), self.critic_opt.clone());
        let stats = match ppo_update(
            &mut self.policy,
            &mut self.critic,
            &mut self.actor_opt,
            &mut self.critic_opt,
            &buf,
            &self.config,
            lr,
        ) {
            Ok(s) => s,
            Err(e) => {
                (self.policy, self.critic, self.actor_opt, self.critic_opt) = snapshot;
                return Err(e);
            }
        };
        self.global_step += buf.len() as u64;
        self.last_stats = stats;
        let row = TrainLogRow {
            step: self.global_step,
            mean_reward,
            mean_reward_utility: mean(&buf.rewards_utility),
            mean_reward_loss: mean(&buf.rewards_loss),
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            approx_kl: stats.approx_kl,
            clip_frac: stats.clip_frac,
            lr,
        };
        self.log.push(row);
        Ok(row)
    }

    /// Iterates until the step budget is spent.
    pub fn run<E: RlEnv + ?Sized>(&mut self, env: &mut E) -> Result<()> {
        while !self.is_finished() {
            self.iterate(env)?;
        }
        Ok(())
    }
}
