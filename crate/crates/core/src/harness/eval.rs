use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ccdf::{ccdf, CcdfTable};
use super::policy::Policy;
use crate::simnet::{EpisodeConfig, LoadBalancerEnv, ObsVector, Placement, SimParams, StepOutcome, OBS_DIM};
use crate::{Error, Result};

pub const REPORT_SCHEMA: &str = "kanlb-eval-report/1";

/// Stream of the per-episode generator used for stochastic evaluation.
const EVAL_ACTION_STREAM: u64 = 0xE7A1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Episode `i` uses seed `seed_base + i`.
    pub seed_base: u64,
    /// Sample actions instead of using the policy mean.
    pub stochastic: bool,
    pub params: SimParams,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            seed_base: 10_000,
            stochastic: false,
            params: SimParams::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("evaluation needs at least one episode".into()));
        }
        self.params.validate()
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.episodes as u64).map(|i| self.seed_base.wrapping_add(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population statistics; NaN for an empty slice.
    pub fn of(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Per-episode summed rewards.
    pub reward_utility: MeanStd,
    pub reward_loss: MeanStd,
    /// Per-step overall metrics.
    pub utility: MeanStd,
    pub loss: MeanStd,
    pub delay: MeanStd,
    /// Fraction of steps without any loss.
    pub no_loss_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfSet {
    pub utility: CcdfTable,
    pub loss: CcdfTable,
    pub delay: CcdfTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: String,
    pub policy_id: String,
    pub config: EvalConfig,
    pub episode_reward_utility: Vec<f64>,
    pub episode_reward_loss: Vec<f64>,
    pub step_utility: Vec<f64>,
    pub step_loss: Vec<f64>,
    pub step_delay: Vec<f64>,
    pub summary: EvalSummary,
    pub ccdf: CcdfSet,
}

impl EvalReport {
    pub fn episodes(&self) -> usize {
        self.episode_reward_utility.len()
    }

    pub fn seed_base(&self) -> u64 {
        self.config.seed_base
    }

    /// Mean summed reward of the given kind.
    pub fn mean_reward(&self, kind: crate::simnet::RewardKind) -> f64 {
        match kind {
            crate::simnet::RewardKind::Utility => self.summary.reward_utility.mean,
            crate::simnet::RewardKind::Loss => self.summary.reward_loss.mean,
        }
    }

    fn from_episodes(policy_id: &str, config: &EvalConfig, episodes: Vec<EpisodeRecord>) -> Result<Self> {
        let mut r = EvalReport {
            schema_version: REPORT_SCHEMA.to_string(),
            policy_id: policy_id.to_string(),
            config: config.clone(),
            episode_reward_utility: Vec::with_capacity(episodes.len()),
            episode_reward_loss: Vec::with_capacity(episodes.len()),
            step_utility: Vec::new(),
            step_loss: Vec::new(),
            step_delay: Vec::new(),
            summary: EvalSummary {
                reward_utility: MeanStd { mean: 0.0, std: 0.0 },
                reward_loss: MeanStd { mean: 0.0, std: 0.0 },
                utility: MeanStd { mean: 0.0, std: 0.0 },
                loss: MeanStd { mean: 0.0, std: 0.0 },
                delay: MeanStd { mean: 0.0, std: 0.0 },
                no_loss_fraction: 0.0,
            },
            ccdf: CcdfSet {
                utility: ccdf(&[0.0])?,
                loss: ccdf(&[0.0])?,
                delay: ccdf(&[0.0])?,
            },
        };
        for ep in episodes {
            r.episode_reward_utility.push(ep.reward_utility);
            r.episode_reward_loss.push(ep.reward_loss);
            r.step_utility.extend(ep.utility);
            r.step_loss.extend(ep.loss);
            r.step_delay.extend(ep.delay);
        }
        r.summary = EvalSummary {
            reward_utility: MeanStd::of(&r.episode_reward_utility),
            reward_loss: MeanStd::of(&r.episode_reward_loss),
            utility: MeanStd::of(&r.step_utility),
            loss: MeanStd::of(&r.step_loss),
            delay: MeanStd::of(&r.step_delay),
            no_loss_fraction: r.step_loss.iter().filter(|&&l| l <= 0.0).count() as f64 / r.step_loss.len() as f64,
        };
        r.ccdf = CcdfSet {
            utility: ccdf(&r.step_utility)?,
            loss: ccdf(&r.step_loss)?,
            delay: ccdf(&r.step_delay)?,
        };
        Ok(r)
    }
}

struct EpisodeRecord {
    reward_utility: f64,
    reward_loss: f64,
    utility: Vec<f64>,
    loss: Vec<f64>,
    delay: Vec<f64>,
}

/// Runs one episode; `visit` sees every observation before the policy acts
/// and the outcome that follows.
fn run_episode<P: Policy + ?Sized>(
    policy: &P,
    params: &SimParams,
    seed: u64,
    stochastic: bool,
    mut visit: impl FnMut(&ObsVector, &Placement, &StepOutcome),
) -> Result<EpisodeRecord> {
    let mut env = LoadBalancerEnv::new(params.clone())?;
    let mut obs = env.reset(EpisodeConfig::sample(seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EVAL_ACTION_STREAM);
    let mut rec = EpisodeRecord {
        reward_utility: 0.0,
        reward_loss: 0.0,
        utility: Vec::new(),
        loss: Vec::new(),
        delay: Vec::new(),
    };
    loop {
        let placement = policy.decide(&obs, stochastic.then_some(&mut rng as &mut dyn RngCore));
        if let Placement::Target(a) = placement {
            if !a.is_finite() {
                return Err(Error::Domain(format!("policy '{}' produced a non-finite action", policy.id())));
            }
        }
        let out = env.step_with(placement)?;
        visit(&obs, &placement, &out);
        rec.reward_utility += out.reward_utility;
        rec.reward_loss += out.reward_loss;
        rec.utility.push(out.info.overall_utility);
        rec.loss.push(out.info.overall_loss);
        rec.delay.push(out.info.overall_delay);
        obs = out.obs;
        if out.done {
            return Ok(rec);
        }
    }
}

/// Evaluates `policy` on `config.episodes` seeded episodes. Episodes run in
/// parallel; results are reduced in episode order, so the report does not
/// depend on the thread count.
pub fn run_eval<P: Policy + ?Sized>(policy: &P, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    let seeds: Vec<u64> = config.seeds().collect();
    let episodes: Vec<EpisodeRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            run_episode(policy, &config.params, seed, config.stochastic, |_, _, _| {}).map_err(|e| Error::Episode {
                episode: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    EvalReport::from_episodes(policy.id(), config, episodes)
}

/// Observations visited by `policy` (acting deterministically) and its
/// mean action at each, over `episodes` episodes from `seed_base`.
pub fn collect_visited(
    policy: &dyn Policy,
    params: &SimParams,
    episodes: usize,
    seed_base: u64,
) -> Result<(Vec<[f64; OBS_DIM]>, Vec<f64>)> {
    let per_episode: Vec<(Vec<[f64; OBS_DIM]>, Vec<f64>)> = (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let (mut states, mut actions) = (Vec::new(), Vec::new());
            run_episode(policy, params, seed_base.wrapping_add(i), false, |obs, placement, _| {
                let x = obs.to_array();
                let a = match placement {
                    Placement::Target(a) => *a,
                    Placement::CapacityProportional => policy.mean_action(&x).unwrap_or(0.0),
                };
                states.push(x);
                actions.push(a);
            })
            .map_err(|e| Error::Episode {
                episode: i as usize,
                source: Box::new(e),
            })?;
            Ok((states, actions))
        })
        .collect::<Result<_>>()?;
    let mut states = Vec::new();
    let mut actions = Vec::new();
    for (s, a) in per_episode {
        states.extend(s);
        actions.extend(a);
    }
    Ok((states, actions))
}
