//! The `kanlb` command line: `train`, `extract`, `eval` and `compare`.
//!
//! Every command writes into a fresh `<out>/<timestamp>-<command>/`
//! directory and finishes by writing `manifest.json`, which lists the
//! resolved configuration and every output file. Exit codes: 0 on success,
//! 1 on a runtime failure, 2 on a usage or configuration error.

pub mod config;
pub mod pipeline;
pub mod run;
pub mod spec;

pub use config::{ExtractConfig, RunConfig, StateSource};
pub use pipeline::{eval_config, evaluate, extract_policy, train_policy, ExtractionMethod, ExtractionReport, TrainOutcome};
pub use run::{run_from_args, ExitStatus};
pub use spec::{resolve_spec, Resolved};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MANIFEST_SCHEMA: &str = "kanlb-manifest/1";

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSeeds {
    pub ppo_seed: u64,
    pub distill_seed: u64,
    pub eval_seed_base: u64,
    pub eval_episodes: usize,
}

/// Record of one command invocation, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: RunConfig,
    /// The resolved config as a standalone file inside the run directory.
    pub config_file: String,
    pub seeds: ManifestSeeds,
    pub code_version: String,
    pub checkpoints: Vec<String>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// A run directory being filled. Paths are recorded relative to it.
#[derive(Debug)]
pub struct RunDir {
    pub path: PathBuf,
    command: String,
    outputs: Vec<String>,
    checkpoints: Vec<String>,
    started: Instant,
    started_at: String,
}

impl RunDir {
    pub fn create(out_root: &Path, command: &str) -> Result<Self> {
        let now = chrono::Utc::now();
        let stamp = now.format("%Y%m%dT%H%M%S%.3fZ").to_string();
        let mut path = out_root.join(format!("{stamp}-{command}"));
        let mut k = 2;
        while path.exists() {
            path = out_root.join(format!("{stamp}-{command}-{k}"));
            k += 1;
        }
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            command: command.to_string(),
            outputs: Vec::new(),
            checkpoints: Vec::new(),
            started: Instant::now(),
            started_at: now.to_rfc3339(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path.join(name);
        write_atomic(&p, bytes)?;
        self.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn write_checkpoint(&mut self, name: &str, ck: &crate::neural::Checkpoint) -> Result<PathBuf> {
        let p = self.write(name, ck.to_json().as_bytes())?;
        self.checkpoints.push(name.to_string());
        Ok(p)
    }

    /// Records a file that was written into the directory by other means.
    pub fn record(&mut self, path: &Path) {
        let rel = path.strip_prefix(&self.path).unwrap_or(path);
        self.outputs.push(rel.display().to_string());
    }

    /// Writes the resolved config and then the manifest.
    pub fn finish(mut self, args: &[String], config: &RunConfig) -> Result<PathBuf> {
        let config_file = "config.resolved.conf".to_string();
        self.write(&config_file, config.render().as_bytes())?;
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA.to_string(),
            command: self.command.clone(),
            args: args.to_vec(),
            config: config.clone(),
            config_file,
            seeds: ManifestSeeds {
                ppo_seed: config.ppo.seed,
                distill_seed: config.distill.seed,
                eval_seed_base: config.eval.seed_base,
                eval_episodes: config.eval.episodes,
            },
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            checkpoints: self.checkpoints.clone(),
            outputs: self.outputs.clone(),
            started_at: self.started_at.clone(),
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.path.join("manifest.json"), json.as_bytes())?;
        Ok(self.path)
    }
}
