//! Environments as seen by the training loop.

use crate::simnet::{EpisodeConfig, LoadBalancerEnv, ObsVector, SimParams, StepInfo, StepOutcome};
use crate::Result;

pub trait RlEnv {
    /// Starts a new episode.
    fn reset(&mut self) -> Result<ObsVector>;
    fn step(&mut self, action: f64) -> Result<StepOutcome>;
}

/// The load-balancing environment with a fresh randomized episode config on
/// every reset; episode `k` uses seed `seed_base + k`.
#[derive(Debug, Clone)]
pub struct EpisodicEnv {
    env: LoadBalancerEnv,
    seed_base: u64,
    episodes: u64,
}

impl EpisodicEnv {
    pub fn new(params: SimParams, seed_base: u64) -> Result<Self> {
        Ok(Self {
            env: LoadBalancerEnv::new(params)?,
            seed_base,
            episodes: 0,
        })
    }

    pub fn episodes_started(&self) -> u64 {
        self.episodes
    }
}

impl RlEnv for EpisodicEnv {
    fn reset(&mut self) -> Result<ObsVector> {
        let cfg = EpisodeConfig::sample(self.seed_base.wrapping_add(self.episodes));
        self.episodes += 1;
        self.env.reset(cfg)
    }

    fn step(&mut self, action: f64) -> Result<StepOutcome> {
        self.env.step(action)
    }
}

/// One-state bandit: every step ends the episode and pays
/// `-(action - optimum)^2` on both reward channels.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    pub optimum: f64,
}

impl RlEnv for BanditEnv {
    fn reset(&mut self) -> Result<ObsVector> {
        Ok(ObsVector::default())
    }

    fn step(&mut self, action: f64) -> Result<StepOutcome> {
        let r = -(action.clamp(-1.0, 1.0) - self.optimum).powi(2);
        Ok(StepOutcome {
            obs: ObsVector::default(),
            reward_utility: r,
            reward_loss: r,
            done: true,
            info: StepInfo::default(),
        })
    }
}
