//! Flat `key = value` config files.
//!
//! ```text
//! # comment
//! include = table2.conf
//! ppo.total_steps = 2000
//! ```
//!
//! `include` is resolved relative to the including file and applied in
//! place, so later lines override included ones. Unknown keys are collected
//! and reported together.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::harness::EvalConfig;
use crate::ppo::PpoConfig;
use crate::simnet::{LambdaSource, SimParams};
use crate::symbolic::{DistillConfig, DEFAULT_IMPORTANCE_THRESHOLD};
use crate::{Error, Result};

const MAX_INCLUDE_DEPTH: usize = 8;

/// Where extraction takes its state samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSource {
    /// States visited by the parent policy acting deterministically.
    Visited,
    /// A uniform per-input grid over the visited range.
    Grid,
}

impl FromStr for StateSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "visited" => Ok(StateSource::Visited),
            "grid" => Ok(StateSource::Grid),
            _ => Err(Error::Config(format!("unknown state source '{s}' (expected visited or grid)"))),
        }
    }
}

impl StateSource {
    fn as_str(self) -> &'static str {
        match self {
            StateSource::Visited => "visited",
            StateSource::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub importance_threshold: f64,
    pub state_source: StateSource,
    /// Episodes of parent rollouts used for fitting.
    pub state_episodes: usize,
    pub state_seed_base: u64,
    /// Episodes of parent rollouts held out for the fidelity score.
    pub holdout_episodes: usize,
    pub holdout_seed_base: u64,
    pub finetune_steps: u64,
    /// Episodes used to score expressions during fine-tuning.
    pub finetune_eval_episodes: usize,
    pub finetune_eval_seed_base: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            importance_threshold: DEFAULT_IMPORTANCE_THRESHOLD,
            state_source: StateSource::Visited,
            state_episodes: 100,
            state_seed_base: 20_000,
            holdout_episodes: 200,
            holdout_seed_base: 30_000,
            finetune_steps: 20_000,
            finetune_eval_episodes: 20,
            finetune_eval_seed_base: 40_000,
        }
    }
}

/// Every tunable of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sim: SimParams,
    pub ppo: PpoConfig,
    pub eval: EvalConfig,
    pub extract: ExtractConfig,
    pub distill: DistillConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimParams::default(),
            ppo: PpoConfig::default(),
            eval: EvalConfig::default(),
            extract: ExtractConfig::default(),
            distill: DistillConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|s| parse(key, s.trim())).collect()
}

fn lambda_source(key: &str, v: &str) -> Result<LambdaSource> {
    match v {
        "configured" => Ok(LambdaSource::Configured),
        "online" => Ok(LambdaSource::Online),
        _ => Err(Error::Config(format!("{key}: expected configured or online, got '{v}'"))),
    }
}

impl RunConfig {
    /// Sets one key. Returns `Ok(false)` for an unknown key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<bool> {
        let (s, p, e, x, d) = (&mut self.sim, &mut self.ppo, &mut self.eval, &mut self.extract, &mut self.distill);
        match key {
            "sim.capacity_mpls" => s.capacity_mpls = parse(key, v)?,
            "sim.capacity_internet" => s.capacity_internet = parse(key, v)?,
            "sim.queue_packets" => s.queue_packets = parse(key, v)?,
            "sim.packet_bytes" => s.packet_bytes = parse(key, v)?,
            "sim.base_delay" => s.base_delay = parse(key, v)?,
            "sim.sub_steps" => s.sub_steps = parse(key, v)?,
            "sim.flow_rate" => s.flow_rate = parse(key, v)?,
            "sim.mean_flow_duration" => s.mean_flow_duration = parse(key, v)?,
            "sim.mean_background_duration" => s.mean_background_duration = parse(key, v)?,
            "sim.rate_ceiling" => s.rate_ceiling = parse(key, v)?,
            "sim.decrease_factor" => s.decrease_factor = parse(key, v)?,
            "sim.increase_fraction" => s.increase_fraction = parse(key, v)?,
            "sim.wave_period" => s.wave_period = parse(key, v)?,
            "sim.reward_alpha" => s.reward_alpha = parse(key, v)?,
            "sim.reward_beta" => s.reward_beta = parse(key, v)?,
            "sim.lambda_source" => s.lambda_source = lambda_source(key, v)?,

            "ppo.total_steps" => p.total_steps = parse(key, v)?,
            "ppo.rollout_steps" => p.rollout_steps = parse(key, v)?,
            "ppo.lr" => p.lr = parse(key, v)?,
            "ppo.anneal_lr" => p.anneal_lr = parse_bool(key, v)?,
            "ppo.gamma" => p.gamma = parse(key, v)?,
            "ppo.gae_lambda" => p.gae_lambda = parse(key, v)?,
            "ppo.update_epochs" => p.update_epochs = parse(key, v)?,
            "ppo.clip_coeff" => p.clip_coeff = parse(key, v)?,
            "ppo.reward" => p.reward_kind = v.parse().map_err(|_| Error::Config(format!("{key}: unknown reward '{v}'")))?,
            "ppo.vf_coef" => p.vf_coef = parse(key, v)?,
            "ppo.ent_coef" => p.ent_coef = parse(key, v)?,
            "ppo.max_grad_norm" => p.max_grad_norm = parse(key, v)?,
            "ppo.normalize_reward" => p.normalize_reward = parse_bool(key, v)?,
            "ppo.seed" => p.seed = parse(key, v)?,
            "ppo.hidden_sizes" => p.hidden_sizes = parse_list(key, v)?,
            "ppo.init_log_std" => p.init_log_std = parse(key, v)?,
            "ppo.episode_seed_base" => p.episode_seed_base = parse(key, v)?,
            "kan.grid_lo" => p.grid.lo = parse(key, v)?,
            "kan.grid_hi" => p.grid.hi = parse(key, v)?,
            "kan.grid_intervals" => p.grid.intervals = parse(key, v)?,
            "kan.spline_degree" => p.grid.degree = parse(key, v)?,

            "eval.episodes" => e.episodes = parse(key, v)?,
            "eval.seed_base" => e.seed_base = parse(key, v)?,
            "eval.stochastic" => e.stochastic = parse_bool(key, v)?,

            "extract.importance_threshold" => x.importance_threshold = parse(key, v)?,
            "extract.state_source" => x.state_source = v.parse()?,
            "extract.state_episodes" => x.state_episodes = parse(key, v)?,
            "extract.state_seed_base" => x.state_seed_base = parse(key, v)?,
            "extract.holdout_episodes" => x.holdout_episodes = parse(key, v)?,
            "extract.holdout_seed_base" => x.holdout_seed_base = parse(key, v)?,
            "extract.finetune_steps" => x.finetune_steps = parse(key, v)?,
            "extract.finetune_eval_episodes" => x.finetune_eval_episodes = parse(key, v)?,
            "extract.finetune_eval_seed_base" => x.finetune_eval_seed_base = parse(key, v)?,

            "distill.dataset_size" => d.dataset_size = parse(key, v)?,
            "distill.population" => d.population = parse(key, v)?,
            "distill.generations" => d.generations = parse(key, v)?,
            "distill.tournament" => d.tournament = parse(key, v)?,
            "distill.max_depth" => d.max_depth = parse(key, v)?,
            "distill.penalty" => d.penalty = parse(key, v)?,
            "distill.search_parsimony" => d.search_parsimony = parse(key, v)?,
            "distill.seed" => d.seed = parse(key, v)?,
            "distill.holdout_every" => d.holdout_every = parse(key, v)?,
            "distill.fitness_samples" => d.fitness_samples = parse(key, v)?,
            "distill.tune_iterations" => d.tune_iterations = parse(key, v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (s, p, e, x, d) = (&self.sim, &self.ppo, &self.eval, &self.extract, &self.distill);
        let f = |v: f64| format!("{v:?}");
        let hidden = p.hidden_sizes.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",");
        let lambda = match s.lambda_source {
            LambdaSource::Configured => "configured",
            LambdaSource::Online => "online",
        };
        vec![
            ("sim.capacity_mpls", f(s.capacity_mpls)),
            ("sim.capacity_internet", f(s.capacity_internet)),
            ("sim.queue_packets", f(s.queue_packets)),
            ("sim.packet_bytes", f(s.packet_bytes)),
            ("sim.base_delay", f(s.base_delay)),
            ("sim.sub_steps", s.sub_steps.to_string()),
            ("sim.flow_rate", f(s.flow_rate)),
            ("sim.mean_flow_duration", f(s.mean_flow_duration)),
            ("sim.mean_background_duration", f(s.mean_background_duration)),
            ("sim.rate_ceiling", f(s.rate_ceiling)),
            ("sim.decrease_factor", f(s.decrease_factor)),
            ("sim.increase_fraction", f(s.increase_fraction)),
            ("sim.wave_period", f(s.wave_period)),
            ("sim.reward_alpha", f(s.reward_alpha)),
            ("sim.reward_beta", f(s.reward_beta)),
            ("sim.lambda_source", lambda.to_string()),
            ("ppo.total_steps", p.total_steps.to_string()),
            ("ppo.rollout_steps", p.rollout_steps.to_string()),
            ("ppo.lr", f(p.lr)),
            ("ppo.anneal_lr", p.anneal_lr.to_string()),
            ("ppo.gamma", f(p.gamma)),
            ("ppo.gae_lambda", f(p.gae_lambda)),
            ("ppo.update_epochs", p.update_epochs.to_string()),
            ("ppo.clip_coeff", f(p.clip_coeff)),
            ("ppo.reward", p.reward_kind.as_str().to_string()),
            ("ppo.vf_coef", f(p.vf_coef)),
            ("ppo.ent_coef", f(p.ent_coef)),
            ("ppo.max_grad_norm", f(p.max_grad_norm)),
            ("ppo.normalize_reward", p.normalize_reward.to_string()),
            ("ppo.seed", p.seed.to_string()),
            ("ppo.hidden_sizes", hidden),
            ("ppo.init_log_std", f(p.init_log_std)),
            ("ppo.episode_seed_base", p.episode_seed_base.to_string()),
            ("kan.grid_lo", f(p.grid.lo)),
            ("kan.grid_hi", f(p.grid.hi)),
            ("kan.grid_intervals", p.grid.intervals.to_string()),
            ("kan.spline_degree", p.grid.degree.to_string()),
            ("eval.episodes", e.episodes.to_string()),
            ("eval.seed_base", e.seed_base.to_string()),
            ("eval.stochastic", e.stochastic.to_string()),
            ("extract.importance_threshold", f(x.importance_threshold)),
            ("extract.state_source", x.state_source.as_str().to_string()),
            ("extract.state_episodes", x.state_episodes.to_string()),
            ("extract.state_seed_base", x.state_seed_base.to_string()),
            ("extract.holdout_episodes", x.holdout_episodes.to_string()),
            ("extract.holdout_seed_base", x.holdout_seed_base.to_string()),
            ("extract.finetune_steps", x.finetune_steps.to_string()),
            ("extract.finetune_eval_episodes", x.finetune_eval_episodes.to_string()),
            ("extract.finetune_eval_seed_base", x.finetune_eval_seed_base.to_string()),
            ("distill.dataset_size", d.dataset_size.to_string()),
            ("distill.population", d.population.to_string()),
            ("distill.generations", d.generations.to_string()),
            ("distill.tournament", d.tournament.to_string()),
            ("distill.max_depth", d.max_depth.to_string()),
            ("distill.penalty", f(d.penalty)),
            ("distill.search_parsimony", f(d.search_parsimony)),
            ("distill.seed", d.seed.to_string()),
            ("distill.holdout_every", d.holdout_every.to_string()),
            ("distill.fitness_samples", d.fitness_samples.to_string()),
            ("distill.tune_iterations", d.tune_iterations.to_string()),
        ]
    }

    /// The resolved config as a self-contained file (no includes).
    pub fn render(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.ppo.validate()?;
        self.eval.validate()?;
        self.distill.validate()?;
        let x = &self.extract;
        if !(x.importance_threshold.is_finite() && x.importance_threshold >= 0.0) {
            return Err(Error::Config("extract.importance_threshold must be >= 0".into()));
        }
        if x.state_episodes == 0 || x.holdout_episodes == 0 || x.finetune_eval_episodes == 0 {
            return Err(Error::Config("extract episode counts must be positive".into()));
        }
        Ok(())
    }

    /// Applies `text` on top of this config. `base` resolves includes.
    pub fn apply_text(&mut self, text: &str, base: Option<&Path>) -> Result<()> {
        let mut unknown = BTreeSet::new();
        self.apply_inner(text, base, "<text>", 0, &mut unknown)?;
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownKeys(unknown.into_iter().collect()))
        }
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut unknown = BTreeSet::new();
        self.apply_inner(&text, path.parent(), &path.display().to_string(), 0, &mut unknown)?;
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownKeys(unknown.into_iter().collect()))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = Self::default();
        c.apply_file(path)?;
        c.validate()?;
        Ok(c)
    }

    fn apply_inner(
        &mut self,
        text: &str,
        base: Option<&Path>,
        origin: &str,
        depth: usize,
        unknown: &mut BTreeSet<String>,
    ) -> Result<()> {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(Error::Config(format!("{origin}: includes nested too deeply")));
        }
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected 'key = value'", n + 1)))?;
            if key == "include" {
                let path: PathBuf = base.map_or_else(|| PathBuf::from(value), |b| b.join(value));
                let inc = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                self.apply_inner(&inc, path.parent(), &path.display().to_string(), depth + 1, unknown)?;
            } else if !self.set(key, value)? {
                unknown.insert(key.to_string());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        let mut c = RunConfig::default();
        c.ppo.total_steps = 1234;
        c.ppo.hidden_sizes = vec![8, 4];
        c.sim.lambda_source = LambdaSource::Online;
        c.extract.state_source = StateSource::Grid;
        let mut back = RunConfig::default();
        back.apply_text(&c.render(), None).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let mut c = RunConfig::default();
        let err = c.apply_text("ppo.lr = 0.1\nppo.bogus = 1\nfoo = 2\n", None).unwrap_err();
        match err {
            Error::UnknownKeys(k) => assert_eq!(k, vec!["foo".to_string(), "ppo.bogus".to_string()]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_values_and_lines_are_config_errors() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_text("ppo.lr = fast", None), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("just words", None), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("ppo.anneal_lr = yes", None), Err(Error::Config(_))));
    }

    #[test]
    fn includes_apply_in_place() {
        let dir = std::env::temp_dir().join(format!("kanlb-conf-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("base.conf"), "ppo.total_steps = 10\nppo.lr = 0.5\n").unwrap();
        std::fs::write(dir.join("top.conf"), "ppo.lr = 0.25\ninclude = base.conf\nppo.total_steps = 20 # trailing\n").unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&dir.join("top.conf")).unwrap();
        assert_eq!(c.ppo.total_steps, 20);
        assert_eq!(c.ppo.lr, 0.5);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
