//! Flow-level simulation of the two-link load-balancing environment.
//!
//! Each 2 s step is split into sub-steps. In every sub-step new flows arrive
//! and are placed, each link serves what it can, excess waits in a drop-tail
//! queue and overflow is lost, and flows adapt their sending rate AIMD-style
//! (halve on loss, grow by a fraction of their demand otherwise).

pub mod config;
pub mod controller;
pub mod env;
pub mod link;
pub mod reward;
pub mod trace;
pub mod traffic;

use serde::{Deserialize, Serialize};

pub use config::{EpisodeConfig, LambdaSource, SimParams};
pub use controller::{compute_action_ratio, Controller};
pub use env::{LoadBalancerEnv, Placement};
pub use link::{LinkId, LinkState};
pub use reward::{reward_loss, reward_utility, scaling_factor, RewardKind};
pub use traffic::{Flow, TrafficGenerator, WaveProfile};

pub const OBS_DIM: usize = 10;

/// Observation of the last step. Field order is the order of
/// [`ObsVector::to_array`] and [`ObsVector::FIELD_NAMES`] everywhere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObsVector {
    /// Total main demand / total capacity.
    pub lambda: f64,
    /// (arrived demand - departed demand) / total capacity over the step.
    pub delta_lambda: f64,
    pub lambda_m: f64,
    pub d_m_x10: f64,
    pub l_m_x10: f64,
    pub u_m: f64,
    pub lambda_i: f64,
    pub d_i_x10: f64,
    pub l_i_x10: f64,
    pub u_i: f64,
}

impl ObsVector {
    pub const FIELD_NAMES: [&'static str; OBS_DIM] = [
        "lambda",
        "delta_lambda",
        "lambda_m",
        "d_m_x10",
        "l_m_x10",
        "u_m",
        "lambda_i",
        "d_i_x10",
        "l_i_x10",
        "u_i",
    ];

    pub fn to_array(&self) -> [f64; OBS_DIM] {
        [
            self.lambda,
            self.delta_lambda,
            self.lambda_m,
            self.d_m_x10,
            self.l_m_x10,
            self.u_m,
            self.lambda_i,
            self.d_i_x10,
            self.l_i_x10,
            self.u_i,
        ]
    }

    pub fn from_array(a: [f64; OBS_DIM]) -> Self {
        Self {
            lambda: a[0],
            delta_lambda: a[1],
            lambda_m: a[2],
            d_m_x10: a[3],
            l_m_x10: a[4],
            u_m: a[5],
            lambda_i: a[6],
            d_i_x10: a[7],
            l_i_x10: a[8],
            u_i: a[9],
        }
    }

    pub fn field_index(name: &str) -> Option<usize> {
        Self::FIELD_NAMES.iter().position(|n| *n == name)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Raw per-step metrics, before observation scaling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub delay_m: f64,
    pub delay_i: f64,
    pub loss_m: f64,
    pub loss_i: f64,
    pub util_m: f64,
    pub util_i: f64,
    pub achieved_ratio: f64,
    pub n_main_m: usize,
    pub n_main_i: usize,
    pub n_background: usize,
    pub offered_m: f64,
    pub offered_i: f64,
    pub delivered_m: f64,
    pub delivered_i: f64,
    pub lost_m: f64,
    pub lost_i: f64,
    /// Delivered-bits-weighted mean of the link delays.
    pub overall_delay: f64,
    /// Total lost / total offered over both links.
    pub overall_loss: f64,
    /// Mean per-flow satisfaction of main flows (1 when none were active).
    pub overall_utility: f64,
    pub scale: f64,
}

impl StepInfo {
    /// Recomputes the overall delay and loss from per-link counters.
    pub fn recompose_overall(&self) -> (f64, f64) {
        let delivered = self.delivered_m + self.delivered_i;
        let delay = if delivered > 0.0 {
            (self.delay_m * self.delivered_m + self.delay_i * self.delivered_i) / delivered
        } else {
            0.5 * (self.delay_m + self.delay_i)
        };
        let offered = self.offered_m + self.offered_i;
        let loss = if offered > 0.0 {
            (self.lost_m + self.lost_i) / offered
        } else {
            0.0
        };
        (delay, loss)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub obs: ObsVector,
    pub reward_utility: f64,
    pub reward_loss: f64,
    pub done: bool,
    pub info: StepInfo,
}

impl StepOutcome {
    pub fn reward(&self, kind: RewardKind) -> f64 {
        match kind {
            RewardKind::Utility => self.reward_utility,
            RewardKind::Loss => self.reward_loss,
        }
    }
}
