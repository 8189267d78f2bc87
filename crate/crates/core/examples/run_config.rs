//! Loads a key-value run configuration with includes and overrides, then
//! prints the fully resolved form that run directories record.
//!
//! ```text
//! cargo run --example run_config -- configs/smoke.conf
//! ```

use std::path::Path;

use kanlb::cli::RunConfig;

pub fn run_example(path: &Path, overrides: &str) -> kanlb::Result<RunConfig> {
    let mut config = RunConfig::from_file(path)?;
    config.apply_text(overrides, None)?;
    config.validate()?;
    Ok(config)
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/table2.conf".into());
    let config = run_example(Path::new(&path), "ppo.seed = 7\n")?;
    print!("{}", config.render());
    Ok(())
}
