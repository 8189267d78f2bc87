//! Interpretable load balancing over a two-link (MPLS / Internet) network.
//!
//! The crate bundles everything needed to train a load-balancing policy with
//! PPO, using either a one-layer Kolmogorov-Arnold network (KAN) or an MLP as
//! the actor, and to turn the trained policy into a closed-form controller
//! equation:
//!
//! - [`simnet`]: flow-level, discrete-time simulator of the two links, the
//!   flow-placement controller, the rewards and the capacity-proportional
//!   (EL) baseline.
//! - [`neural`]: B-spline bases, KAN activations and layers, MLPs, the
//!   Gaussian policy head and hand-written reverse-mode gradients.
//! - [`ppo`]: rollouts, GAE and clipped-surrogate updates.
//! - [`symbolic`]: expression trees, the built-in reference controllers and
//!   both extraction paths (activation regression and trajectory
//!   distillation), plus coefficient fine-tuning.
//! - [`harness`]: seeded evaluation, CCDF tables, comparisons and exports.
//! - [`cli`]: config files, run directories and the `kanlb` subcommands.

pub mod cli;
pub mod error;
pub mod harness;
pub mod neural;
pub mod ppo;
pub mod simnet;
pub mod symbolic;

pub use error::{Error, Result};
pub use simnet::{EpisodeConfig, LoadBalancerEnv, ObsVector, SimParams, StepOutcome};
