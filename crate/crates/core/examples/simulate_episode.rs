//! Runs one seeded episode of the two-link simulator with a fixed target
//! ratio and prints the per-step trace as CSV.
//!
//! ```text
//! cargo run --example simulate_episode -- 0.4
//! ```

use kanlb::simnet::trace::{write_trace, TraceRow};
use kanlb::simnet::{EpisodeConfig, LinkId, LoadBalancerEnv, SimParams};

pub struct EpisodeSummary {
    pub rows: Vec<TraceRow>,
    pub reward_utility: f64,
    pub reward_loss: f64,
    /// Largest `|offered - delivered - lost - queue change|` over the episode.
    pub worst_residual: f64,
}

pub fn run_example(target: f64, seed: u64) -> kanlb::Result<EpisodeSummary> {
    let mut env = LoadBalancerEnv::new(SimParams::default())?;
    env.reset(EpisodeConfig::sample(seed))?;
    let mut rows = Vec::new();
    let (mut ru, mut rl, mut worst) = (0.0, 0.0, 0.0f64);
    loop {
        let out = env.step(target)?;
        for id in LinkId::ALL {
            worst = worst.max(env.link(id).conservation_residual().abs());
        }
        ru += out.reward_utility;
        rl += out.reward_loss;
        rows.push(TraceRow::new(rows.len(), target, &out));
        if out.done {
            break;
        }
    }
    Ok(EpisodeSummary {
        rows,
        reward_utility: ru,
        reward_loss: rl,
        worst_residual: worst,
    })
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let target = std::env::args().nth(1).map_or(Ok(0.0), |a| a.parse()).expect("target ratio in [-1, 1]");
    let s = run_example(target, 7)?;
    write_trace(&s.rows, std::io::stdout())?;
    eprintln!("episode reward: utility {:.3}, loss {:.3}", s.reward_utility, s.reward_loss);
    Ok(())
}
