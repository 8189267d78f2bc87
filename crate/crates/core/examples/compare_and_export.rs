//! Compares policies on common random numbers and writes the table and CCDF
//! plots: comparison.csv/json, one report JSON per policy, and
//! ccdf_{utility,loss,delay}.{csv,svg}.
//!
//! ```text
//! cargo run --release --example compare_and_export -- out/compare-demo
//! ```

use std::path::{Path, PathBuf};

use kanlb::harness::{compare, export_comparison, run_eval, ElBaseline, EvalConfig, ExpressionPolicy};
use kanlb::symbolic::ReferenceId;

pub fn run_example(dir: &Path, episodes: usize) -> kanlb::Result<Vec<PathBuf>> {
    let config = EvalConfig {
        episodes,
        ..EvalConfig::default()
    };
    let reports = vec![
        run_eval(&ElBaseline::default(), &config)?,
        run_eval(&ExpressionPolicy::reference(ReferenceId::Eq4), &config)?,
        run_eval(&ExpressionPolicy::reference(ReferenceId::Eq6), &config)?,
    ];
    let comparison = compare(&reports)?;
    print!("{}", comparison.render_table());
    export_comparison(dir, &reports, &comparison)
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "out/compare-demo".into());
    for p in run_example(Path::new(&dir), 100)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
