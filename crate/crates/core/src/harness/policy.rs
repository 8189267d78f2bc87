use rand::RngCore;

use crate::neural::{ActorNet, Checkpoint, GaussianPolicy};
use crate::simnet::{ObsVector, Placement, OBS_DIM};
use crate::symbolic::{reference_policy, Expr, ReferenceId};

/// Anything that can drive the environment for evaluation.
pub trait Policy: Send + Sync {
    fn id(&self) -> &str;

    /// Placement for the next step. `rng` is `Some` only when stochastic
    /// evaluation was requested; deterministic policies ignore it.
    fn decide(&self, obs: &ObsVector, rng: Option<&mut dyn RngCore>) -> Placement;

    /// Deterministic action in `[-1, 1]`, if the policy has one. Used as the
    /// distillation target.
    fn mean_action(&self, obs: &[f64; OBS_DIM]) -> Option<f64>;
}

/// A trained Gaussian actor, evaluated at its clamped mean unless sampling
/// is requested.
#[derive(Debug, Clone)]
pub struct NeuralPolicy {
    pub id: String,
    pub policy: GaussianPolicy<ActorNet>,
}

impl NeuralPolicy {
    pub fn from_checkpoint(id: impl Into<String>, ck: &Checkpoint) -> Self {
        Self {
            id: id.into(),
            policy: ck.policy.clone(),
        }
    }
}

impl Policy for NeuralPolicy {
    fn id(&self) -> &str {
        &self.id
    }

    fn decide(&self, obs: &ObsVector, rng: Option<&mut dyn RngCore>) -> Placement {
        let x = obs.to_array();
        match rng {
            None => Placement::Target(self.policy.mean(&x)),
            Some(r) => Placement::Target(self.policy.sample(&x, r).env_action),
        }
    }

    fn mean_action(&self, obs: &[f64; OBS_DIM]) -> Option<f64> {
        Some(self.policy.mean(obs))
    }
}

#[derive(Debug, Clone)]
pub struct ExpressionPolicy {
    pub id: String,
    pub expr: Expr,
}

impl ExpressionPolicy {
    pub fn new(id: impl Into<String>, expr: Expr) -> Self {
        Self { id: id.into(), expr }
    }

    pub fn reference(id: ReferenceId) -> Self {
        Self::new(format!("builtin:{id}"), reference_policy(id))
    }
}

impl Policy for ExpressionPolicy {
    fn id(&self) -> &str {
        &self.id
    }

    fn decide(&self, obs: &ObsVector, _rng: Option<&mut dyn RngCore>) -> Placement {
        Placement::Target(self.expr.eval(&obs.to_array()))
    }

    fn mean_action(&self, obs: &[f64; OBS_DIM]) -> Option<f64> {
        Some(self.expr.eval(obs))
    }
}

/// Capacity-proportional flow placement (the EL baseline).
#[derive(Debug, Clone)]
pub struct ElBaseline {
    pub id: String,
}

impl Default for ElBaseline {
    fn default() -> Self {
        Self {
            id: "builtin:el-baseline".into(),
        }
    }
}

impl Policy for ElBaseline {
    fn id(&self) -> &str {
        &self.id
    }

    fn decide(&self, _obs: &ObsVector, _rng: Option<&mut dyn RngCore>) -> Placement {
        Placement::CapacityProportional
    }

    fn mean_action(&self, _obs: &[f64; OBS_DIM]) -> Option<f64> {
        None
    }
}
