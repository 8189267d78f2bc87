//! The work behind each subcommand, as library calls.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, StateSource};
use crate::harness::{collect_visited, run_eval, EvalConfig, ExpressionPolicy, NeuralPolicy, Policy};
use crate::neural::{ActorKind, Checkpoint};
use crate::ppo::{EpisodicEnv, PpoConfig, TrainLogRow, Trainer};
use crate::simnet::OBS_DIM;
use crate::symbolic::{
    distill_ppo_ds, extract_kan_symbolic, finetune_coeffs, r_squared, uniform_grid_states, AffineGrid, Expr,
    FinetuneResult,
};
use crate::{Error, Result};

pub const EXTRACTION_SCHEMA: &str = "kanlb-extraction/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMethod {
    KanSymbolic,
    PpoDs,
}

impl ExtractionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractionMethod::KanSymbolic => "kan-symbolic",
            ExtractionMethod::PpoDs => "ppo-ds",
        }
    }
}

impl FromStr for ExtractionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kan-symbolic" => Ok(ExtractionMethod::KanSymbolic),
            "ppo-ds" => Ok(ExtractionMethod::PpoDs),
            _ => Err(Error::Config(format!("unknown extraction method '{s}'"))),
        }
    }
}

/// Outcome of a training run. On a non-finite failure `error` is set and
/// `checkpoint` holds the last good state.
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<TrainLogRow>,
    pub error: Option<Error>,
}

/// Trains an actor-critic pair. `progress` is called after every update.
pub fn train_policy(config: &RunConfig, kind: ActorKind, mut progress: impl FnMut(&TrainLogRow)) -> Result<TrainOutcome> {
    config.validate()?;
    let mut trainer = Trainer::for_actor(config.ppo.clone(), kind)?;
    let mut env = EpisodicEnv::new(config.sim.clone(), config.ppo.episode_seed_base)?;
    while !trainer.is_finished() {
        match trainer.iterate(&mut env) {
            Ok(row) => progress(&row),
            Err(e @ Error::NonFinite(_)) => {
                return Ok(TrainOutcome {
                    checkpoint: trainer.checkpoint(),
                    log: trainer.log.clone(),
                    error: Some(e),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TrainOutcome {
        checkpoint: trainer.checkpoint(),
        log: trainer.log.clone(),
        error: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub schema_version: String,
    pub method: ExtractionMethod,
    pub parent: String,
    pub parent_actor: ActorKind,
    pub reward_kind: crate::simnet::RewardKind,
    pub expression: String,
    pub sexpr: String,
    /// R² of the expression against the parent's clamped mean on held-out
    /// visited states.
    pub fidelity_r_squared: f64,
    pub fidelity_states: usize,
    pub fit_states: usize,
    /// The method's own report (per-term fits or the search front).
    pub details: serde_json::Value,
    pub finetune: Option<FinetuneResult>,
}

/// Extracts a symbolic policy from a checkpoint. Fails before doing any work
/// if the method does not fit the actor.
pub fn extract_policy(
    parent_id: &str,
    ck: &Checkpoint,
    method: ExtractionMethod,
    finetune: bool,
    config: &RunConfig,
) -> Result<(Expr, ExtractionReport)> {
    config.validate()?;
    if method == ExtractionMethod::KanSymbolic && ck.policy.mean_net.as_kan().is_none() {
        return Err(Error::Config(format!(
            "kan-symbolic extraction needs a KAN actor, but '{parent_id}' has an {} actor",
            ck.meta.actor_kind.as_str()
        )));
    }
    let parent = NeuralPolicy::from_checkpoint(parent_id, ck);
    let x = &config.extract;
    let (expr, details, fit_states) = match method {
        ExtractionMethod::KanSymbolic => {
            let layer = ck.policy.mean_net.as_kan().expect("checked above");
            let (visited, _) = collect_visited(&parent, &config.sim, x.state_episodes, x.state_seed_base)?;
            let states = match x.state_source {
                StateSource::Visited => visited,
                StateSource::Grid => uniform_grid_states(&visited_ranges(&visited), 200),
            };
            let (expr, report) = extract_kan_symbolic(layer, &states, x.importance_threshold, &AffineGrid::default())?;
            (expr, serde_json::to_value(report).expect("serializes"), states.len())
        }
        ExtractionMethod::PpoDs => {
            let episodes = config.distill.dataset_size.div_ceil(50).max(1);
            let (mut states, mut targets) = collect_visited(&parent, &config.sim, episodes, x.state_seed_base)?;
            states.truncate(config.distill.dataset_size);
            targets.truncate(config.distill.dataset_size);
            let (expr, report) = distill_ppo_ds(&states, &targets, &config.distill)?;
            (expr, serde_json::to_value(report).expect("serializes"), states.len())
        }
    };

    let mut expr = expr;
    let mut ft = None;
    if finetune && expr.num_constants() > 0 {
        let reward = ck.meta.reward_kind;
        let ppo = PpoConfig {
            total_steps: x.finetune_steps,
            reward_kind: reward,
            ..config.ppo.clone()
        };
        let eval = EvalConfig {
            episodes: x.finetune_eval_episodes,
            seed_base: x.finetune_eval_seed_base,
            stochastic: false,
            params: config.sim.clone(),
        };
        let mut env = EpisodicEnv::new(config.sim.clone(), config.ppo.episode_seed_base)?;
        let score = |e: &Expr| Ok(run_eval(&ExpressionPolicy::new("finetune", e.clone()), &eval)?.mean_reward(reward));
        let (tuned, result) = finetune_coeffs(&expr, &mut env, &ppo, score)?;
        expr = tuned;
        ft = Some(result);
    }

    let (held, parent_actions) = collect_visited(&parent, &config.sim, x.holdout_episodes, x.holdout_seed_base)?;
    let pred: Vec<f64> = held.iter().map(|s| expr.eval(s)).collect();
    let report = ExtractionReport {
        schema_version: EXTRACTION_SCHEMA.to_string(),
        method,
        parent: parent_id.to_string(),
        parent_actor: ck.meta.actor_kind,
        reward_kind: ck.meta.reward_kind,
        expression: expr.to_infix(),
        sexpr: expr.to_sexpr(),
        fidelity_r_squared: r_squared(&pred, &parent_actions),
        fidelity_states: held.len(),
        fit_states,
        details,
        finetune: ft,
    };
    Ok((expr, report))
}

fn visited_ranges(states: &[[f64; OBS_DIM]]) -> [(f64, f64); OBS_DIM] {
    std::array::from_fn(|p| {
        let lo = states.iter().map(|s| s[p]).fold(f64::INFINITY, f64::min);
        let hi = states.iter().map(|s| s[p]).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi.is_finite() {
            (lo, hi)
        } else {
            (0.0, 1.0)
        }
    })
}

/// The evaluation settings of `config` with command-line overrides.
pub fn eval_config(config: &RunConfig, episodes: Option<usize>, seed_base: Option<u64>, stochastic: bool) -> EvalConfig {
    EvalConfig {
        episodes: episodes.unwrap_or(config.eval.episodes),
        seed_base: seed_base.unwrap_or(config.eval.seed_base),
        stochastic: stochastic || config.eval.stochastic,
        params: config.sim.clone(),
    }
}

/// Evaluates a resolved policy, passing loaded reports through.
pub fn evaluate(resolved: super::spec::Resolved, eval: &EvalConfig) -> Result<crate::harness::EvalReport> {
    match resolved {
        super::spec::Resolved::Policy(p) => run_eval(p.as_ref() as &dyn Policy, eval),
        super::spec::Resolved::Report(r) => Ok(*r),
    }
}
