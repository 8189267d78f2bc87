use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::neural::{Differentiable, Mlp};
use crate::ppo::{init_critic, PpoConfig, RlEnv, TrainLogRow, Trainer};
use crate::simnet::OBS_DIM;
use crate::{Error, Result};

/// An expression used as the mean network of a Gaussian policy: its
/// constants are the parameters, its raw (unclipped) value the output. The
/// policy head applies the clamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicMean {
    pub expr: Expr,
}

impl Differentiable for SymbolicMean {
    type Cache = Vec<f64>;

    fn num_params(&self) -> usize {
        self.expr.num_constants()
    }

    fn params(&self) -> Vec<f64> {
        self.expr.constants()
    }

    fn set_params(&mut self, params: &[f64]) {
        self.expr.set_constants(params);
    }

    fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (vec![self.expr.eval_raw(x)], x.to_vec())
    }

    fn backward(&self, x: &Vec<f64>, upstream: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let mut dx = vec![0.0; OBS_DIM.max(x.len())];
        self.expr.backward_raw(x, upstream[0], grad, &mut dx);
        dx.truncate(x.len());
        dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneResult {
    pub expression: String,
    pub sexpr: String,
    pub reward_before: f64,
    pub reward_after: f64,
    pub steps: u64,
    /// Set when tuning stopped early on a non-finite value.
    pub reverted: bool,
    pub log: Vec<TrainLogRow>,
}

/// Continues PPO on the constants of `expr` with its structure frozen.
/// `evaluate` scores an expression (higher is better); the tuned expression
/// is returned only if it scores at least as well as the original.
pub fn finetune_coeffs<E, F>(expr: &Expr, env: &mut E, config: &PpoConfig, evaluate: F) -> Result<(Expr, FinetuneResult)>
where
    E: RlEnv + ?Sized,
    F: Fn(&Expr) -> Result<f64>,
{
    if expr.num_constants() == 0 {
        return Err(Error::Config("expression has no constants to tune".into()));
    }
    let before = evaluate(expr)?;
    if config.total_steps == 0 {
        let result = FinetuneResult {
            expression: expr.to_infix(),
            sexpr: expr.to_sexpr(),
            reward_before: before,
            reward_after: before,
            steps: 0,
            reverted: false,
            log: Vec::new(),
        };
        return Ok((expr.clone(), result));
    }
    let critic: Mlp = init_critic(config);
    let mut trainer = Trainer::new(config.clone(), SymbolicMean { expr: expr.clone() }, critic)?;
    let mut reverted = false;
    while !trainer.is_finished() {
        match trainer.iterate(env) {
            Ok(_) => {
                if trainer.policy.mean_net.params().iter().any(|p| !p.is_finite()) {
                    reverted = true;
                    break;
                }
            }
            Err(Error::NonFinite(_)) => {
                reverted = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut tuned = trainer.policy.mean_net.expr.clone();
    if tuned.constants().iter().any(|c| !c.is_finite()) {
        tuned = expr.clone();
        reverted = true;
    }
    let after = evaluate(&tuned)?;
    let (best, best_score) = if after >= before { (tuned, after) } else { (expr.clone(), before) };
    let result = FinetuneResult {
        expression: best.to_infix(),
        sexpr: best.to_sexpr(),
        reward_before: before,
        reward_after: best_score,
        steps: trainer.global_step,
        reverted,
        log: trainer.log.clone(),
    };
    Ok((best, result))
}
