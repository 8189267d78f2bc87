//! Trains a one-layer KAN actor with PPO on the loss reward and compares it
//! with the baseline. The default budget is short; pass a step count for a
//! full run (100000 steps takes about half a minute in release mode).
//!
//! ```text
//! cargo run --release --example train_kan_actor -- 100000
//! ```

use kanlb::harness::{run_eval, ElBaseline, EvalConfig, NeuralPolicy};
use kanlb::neural::{ActorKind, Checkpoint};
use kanlb::ppo::{EpisodicEnv, PpoConfig, Trainer};
use kanlb::simnet::{RewardKind, SimParams};

pub struct TrainDemo {
    pub checkpoint: Checkpoint,
    pub first_reward: f64,
    pub last_reward: f64,
    pub policy_loss_reward: f64,
    pub baseline_loss_reward: f64,
}

pub fn run_example(steps: u64, eval_episodes: usize) -> kanlb::Result<TrainDemo> {
    let config = PpoConfig {
        total_steps: steps,
        reward_kind: RewardKind::Loss,
        ..PpoConfig::default()
    };
    let mut trainer = Trainer::for_actor(config.clone(), ActorKind::Kan)?;
    let mut env = EpisodicEnv::new(SimParams::default(), config.episode_seed_base)?;
    trainer.run(&mut env)?;
    let log = &trainer.log;
    let q = (log.len() / 4).max(1);
    let avg = |rows: &[kanlb::ppo::TrainLogRow]| rows.iter().map(|r| r.mean_reward).sum::<f64>() / rows.len() as f64;

    let checkpoint = trainer.checkpoint();
    let eval = EvalConfig {
        episodes: eval_episodes,
        ..EvalConfig::default()
    };
    let policy = run_eval(&NeuralPolicy::from_checkpoint("ppo-kan", &checkpoint), &eval)?;
    let baseline = run_eval(&ElBaseline::default(), &eval)?;
    Ok(TrainDemo {
        first_reward: avg(&log[..q]),
        last_reward: avg(&log[log.len() - q..]),
        policy_loss_reward: policy.summary.reward_loss.mean,
        baseline_loss_reward: baseline.summary.reward_loss.mean,
        checkpoint,
    })
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let steps = std::env::args().nth(1).map_or(5_000, |a| a.parse().expect("step count"));
    let d = run_example(steps, 100)?;
    println!("training reward per step: first quarter {:.4}, last quarter {:.4}", d.first_reward, d.last_reward);
    println!(
        "episode loss reward over 100 episodes: PPO-KAN {:.3}, baseline {:.3}",
        d.policy_loss_reward, d.baseline_loss_reward
    );
    Ok(())
}
