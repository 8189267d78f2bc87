//! Distills a black-box policy into a compact expression with genetic
//! programming (the PPO-DS path). The teacher here is one of the built-in
//! controller equations, observed on the states it visits.
//!
//! ```text
//! cargo run --release --example distill_policy
//! ```

use kanlb::harness::{collect_visited, ExpressionPolicy};
use kanlb::simnet::SimParams;
use kanlb::symbolic::{distill_ppo_ds, DistillConfig, DistillReport, Expr, ReferenceId};

pub fn run_example(config: &DistillConfig) -> kanlb::Result<(Expr, DistillReport)> {
    let teacher = ExpressionPolicy::reference(ReferenceId::Eq6);
    let episodes = config.dataset_size.div_ceil(50);
    let (mut states, mut actions) = collect_visited(&teacher, &SimParams::default(), episodes, 20_000)?;
    states.truncate(config.dataset_size);
    actions.truncate(config.dataset_size);
    distill_ppo_ds(&states, &actions, config)
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let (expr, report) = run_example(&DistillConfig::default())?;
    println!("size  mse");
    for f in &report.front {
        println!("{:>4}  {:.3e}  {}", f.size, f.train_mse, f.expression);
    }
    println!("\nselected: {}", expr.to_infix());
    println!("held-out R² {:.4}", report.holdout_r_squared);
    Ok(())
}
