//! Evaluates the built-in controller equations and the capacity-proportional
//! baseline on the same seeded episodes and prints the comparison table.
//!
//! ```text
//! cargo run --release --example reference_policies -- 100
//! ```

use kanlb::harness::{compare, run_eval, Comparison, ElBaseline, EvalConfig, ExpressionPolicy, Policy};
use kanlb::symbolic::ReferenceId;

pub fn run_example(episodes: usize) -> kanlb::Result<Comparison> {
    let config = EvalConfig {
        episodes,
        ..EvalConfig::default()
    };
    let mut policies: Vec<Box<dyn Policy>> = vec![Box::new(ElBaseline::default())];
    for id in ReferenceId::ALL {
        policies.push(Box::new(ExpressionPolicy::reference(id)));
    }
    let reports = policies
        .iter()
        .map(|p| run_eval(p.as_ref(), &config))
        .collect::<kanlb::Result<Vec<_>>>()?;
    compare(&reports)
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let episodes = std::env::args().nth(1).map_or(20, |a| a.parse().expect("episode count"));
    print!("{}", run_example(episodes)?.render_table());
    Ok(())
}
