//! The full command-line workflow driven in-process: train a KAN actor,
//! extract its equation, and compare it with the baseline. Each step writes
//! its own run directory under `out_root`.
//!
//! ```text
//! cargo run --release --example cli_workflow -- out/workflow
//! ```

use std::path::{Path, PathBuf};

use kanlb::cli::{run_from_args, ExitStatus};

fn newest(out_root: &Path, suffix: &str) -> Option<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(out_root)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.contains(suffix)))
        .collect();
    dirs.sort();
    dirs.pop()
}

/// Returns the run directories of the three steps.
pub fn run_example(out_root: &Path, config: &Path, steps: u64) -> Result<[PathBuf; 3], String> {
    let out = out_root.to_string_lossy().into_owned();
    let conf = config.to_string_lossy().into_owned();
    let run = |args: &[&str]| {
        let mut full = vec!["kanlb"];
        full.extend_from_slice(args);
        match run_from_args(full) {
            ExitStatus::Success => Ok(()),
            s => Err(format!("{args:?} exited with {}", s.code())),
        }
    };
    let steps = steps.to_string();
    run(&["train", "--actor", "kan", "--reward", "loss", "--steps", &steps, "--config", &conf, "--out", &out])?;
    let train = newest(out_root, "-train").ok_or("no train directory")?;
    let ck = train.join("checkpoint.json").to_string_lossy().into_owned();
    run(&["extract", &ck, "--method", "kan-symbolic", "--config", &conf, "--out", &out])?;
    let extract = newest(out_root, "-extract").ok_or("no extract directory")?;
    let expr = extract.join("expression.sexpr").to_string_lossy().into_owned();
    run(&["compare", "builtin:el-baseline", &ck, &expr, "--config", &conf, "--out", &out])?;
    let compare = newest(out_root, "-compare").ok_or("no compare directory")?;
    Ok([train, extract, compare])
}

#[allow(dead_code)]
fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/workflow".into());
    match run_example(Path::new(&out), Path::new("configs/table2.conf"), 20_000) {
        Ok(dirs) => {
            for d in dirs {
                println!("{}", d.display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
