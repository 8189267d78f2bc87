use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bspline::SplineGrid;
use super::mlp::Mlp;
use super::policy::{ActorKind, ActorNet, GaussianPolicy};
use crate::simnet::RewardKind;
use crate::{Error, Result};

pub const CHECKPOINT_SCHEMA: &str = "kanlb-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub actor_kind: ActorKind,
    pub reward_kind: RewardKind,
    pub seed: u64,
    pub global_step: u64,
    /// Grid of the KAN actor, if any.
    pub grid: Option<SplineGrid>,
}

/// Everything needed to rebuild a trained actor-critic pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: String,
    pub meta: CheckpointMeta,
    pub policy: GaussianPolicy<ActorNet>,
    pub critic: Mlp,
}

impl Checkpoint {
    pub fn new(policy: GaussianPolicy<ActorNet>, critic: Mlp, reward_kind: RewardKind, seed: u64, global_step: u64) -> Self {
        let grid = policy.mean_net.as_kan().map(|k| k.grid);
        Self {
            schema_version: CHECKPOINT_SCHEMA.to_string(),
            meta: CheckpointMeta {
                actor_kind: policy.mean_net.kind(),
                reward_kind,
                seed,
                global_step,
                grid,
            },
            policy,
            critic,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::json("<checkpoint>", e))?;
        ck.check_schema()?;
        Ok(ck)
    }

    fn check_schema(&self) -> Result<()> {
        if self.schema_version != CHECKPOINT_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported checkpoint schema '{}', expected '{CHECKPOINT_SCHEMA}'",
                self.schema_version
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::cli::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        ck.check_schema()?;
        Ok(ck)
    }
}
