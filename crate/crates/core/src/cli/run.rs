use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::RunConfig;
use super::pipeline::{eval_config, evaluate, extract_policy, train_policy, ExtractionMethod};
use super::spec::resolve_spec;
use super::RunDir;
use crate::harness::{compare, export_comparison, report_to_json, slug, EvalReport, Metric};
use crate::neural::{ActorKind, Checkpoint};
use crate::simnet::RewardKind;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "kanlb", version, about = "Train, extract, evaluate and compare load-balancing policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a PPO actor-critic pair.
    Train(TrainArgs),
    /// Extract a symbolic policy from a checkpoint.
    Extract(ExtractArgs),
    /// Evaluate policies on seeded episodes.
    Eval(EvalArgs),
    /// Evaluate two or more policies on the same episodes and tabulate them.
    Compare(EvalArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root directory for run directories.
    #[arg(long, env = "KANLB_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ActorArg {
    Kan,
    Mlp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RewardArg {
    Utility,
    Loss,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    KanSymbolic,
    PpoDs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "kan")]
    actor: ActorArg,
    /// Reward to optimize (default: the config's `ppo.reward`).
    #[arg(long, value_enum)]
    reward: Option<RewardArg>,
    #[arg(long, env = "KANLB_SEED")]
    seed: Option<u64>,
    /// Override `ppo.total_steps`.
    #[arg(long)]
    steps: Option<u64>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Checkpoint written by `train`.
    checkpoint: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Continue PPO on the extracted constants.
    #[arg(long)]
    finetune: bool,
    /// Seed of the expression search and fine-tuning.
    #[arg(long, env = "KANLB_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint, expression file, builtin:{eq3,eq4,eq5,eq6,el-baseline}
    /// or report:<path>.
    #[arg(required = true)]
    policies: Vec<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Sample actions instead of using the policy mean.
    #[arg(long)]
    stochastic: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    Usage = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the exit status; messages go to stdout and stderr.
pub fn run_from_args<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitStatus::Success,
                _ => ExitStatus::Usage,
            };
        }
    };
    let text_args: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &text_args) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitStatus::Success
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitStatus::Usage
            } else {
                ExitStatus::Failure
            }
        }
    }
}

fn run(cli: Cli, args: &[String]) -> Result<PathBuf> {
    match cli.command {
        Command::Train(a) => cmd_train(a, args),
        Command::Extract(a) => cmd_extract(a, args),
        Command::Eval(a) => cmd_eval(a, args, false),
        Command::Compare(a) => cmd_eval(a, args, true),
    }
}

fn cmd_train(a: TrainArgs, args: &[String]) -> Result<PathBuf> {
    let mut config = load_config(a.common.config.as_deref())?;
    if let Some(r) = a.reward {
        config.ppo.reward_kind = match r {
            RewardArg::Utility => RewardKind::Utility,
            RewardArg::Loss => RewardKind::Loss,
        };
    }
    if let Some(s) = a.seed {
        config.ppo.seed = s;
    }
    if let Some(n) = a.steps {
        config.ppo.total_steps = n;
    }
    config.validate()?;
    let kind = match a.actor {
        ActorArg::Kan => ActorKind::Kan,
        ActorArg::Mlp => ActorKind::Mlp,
    };
    let total = config.ppo.total_steps;
    let mut next_report = total / 10;
    let outcome = train_policy(&config, kind, |row| {
        if row.step >= next_report {
            eprintln!(
                "step {:>7}/{total}  reward {:>8.4}  kl {:.4}  clip {:.3}",
                row.step, row.mean_reward, row.approx_kl, row.clip_frac
            );
            next_report += (total / 10).max(1);
        }
    })?;
    let mut run = RunDir::create(&a.common.out, "train")?;
    let mut log = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut log);
        for row in &outcome.log {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("train_log.csv", e))?;
    }
    run.write("train_log.csv", &log)?;
    if let Some(err) = outcome.error {
        let p = run.write_checkpoint("checkpoint.last-good.json", &outcome.checkpoint)?;
        return Err(Error::NonFinite(format!("{err}; last good checkpoint: {}", p.display())));
    }
    run.write_checkpoint("checkpoint.json", &outcome.checkpoint)?;
    run.finish(args, &config)
}

fn cmd_extract(a: ExtractArgs, args: &[String]) -> Result<PathBuf> {
    let mut config = load_config(a.common.config.as_deref())?;
    if let Some(s) = a.seed {
        config.distill.seed = s;
        config.ppo.seed = s;
    }
    config.validate()?;
    let ck = Checkpoint::load(&a.checkpoint)?;
    let method = match a.method {
        MethodArg::KanSymbolic => ExtractionMethod::KanSymbolic,
        MethodArg::PpoDs => ExtractionMethod::PpoDs,
    };
    let parent = a.checkpoint.display().to_string();
    let (expr, report) = extract_policy(&parent, &ck, method, a.finetune, &config)?;
    eprintln!("{}: {}", method.as_str(), report.expression);
    eprintln!("fidelity R² {:.4} on {} held-out states", report.fidelity_r_squared, report.fidelity_states);
    let mut run = RunDir::create(&a.common.out, "extract")?;
    run.write("expression.sexpr", format!("{}\n", expr.to_sexpr()).as_bytes())?;
    run.write("expression.txt", format!("{}\n", expr.to_infix()).as_bytes())?;
    run.write(
        "extraction_report.json",
        serde_json::to_string_pretty(&report).expect("serializes").as_bytes(),
    )?;
    run.finish(args, &config)
}

fn cmd_eval(a: EvalArgs, args: &[String], comparing: bool) -> Result<PathBuf> {
    if comparing && a.policies.len() < 2 {
        return Err(Error::Config("compare needs at least two policies".into()));
    }
    let mut config = load_config(a.common.config.as_deref())?;
    let eval = eval_config(&config, a.episodes, a.seed_base, a.stochastic);
    config.eval = eval.clone();
    config.validate()?;
    // resolve everything first so a bad spec fails before any work
    let resolved = a.policies.iter().map(|s| resolve_spec(s)).collect::<Result<Vec<_>>>()?;
    let mut reports: Vec<EvalReport> = Vec::with_capacity(resolved.len());
    for (spec, r) in a.policies.iter().zip(resolved) {
        let mut report = evaluate(r, &eval)?;
        report.policy_id = spec.clone();
        reports.push(report);
    }
    let comparison = if comparing { Some(compare(&reports)?) } else { None };

    let command = if comparing { "compare" } else { "eval" };
    let mut run = RunDir::create(&a.common.out, command)?;
    match &comparison {
        Some(c) => {
            print!("{}", c.render_table());
            for p in export_comparison(&run.path.clone(), &reports, c)? {
                run.record(&p);
            }
        }
        None => {
            for (i, r) in reports.iter().enumerate() {
                let s = &r.summary;
                println!(
                    "{}: utility {:.3} ± {:.3}  loss {:.3} ± {:.3}  no-loss {:.3}",
                    r.policy_id,
                    s.reward_utility.mean,
                    s.reward_utility.std,
                    s.reward_loss.mean,
                    s.reward_loss.std,
                    s.no_loss_fraction
                );
                run.write(&format!("report_{i:02}_{}.json", slug(&r.policy_id)), report_to_json(r).as_bytes())?;
            }
            for m in Metric::ALL {
                let mut buf = Vec::new();
                crate::harness::write_ccdf_csv(&reports, m, &mut buf)?;
                run.write(&format!("ccdf_{}.csv", m.name()), &buf)?;
                run.write(
                    &format!("ccdf_{}.svg", m.name()),
                    crate::harness::ccdf_svg(&reports, m).as_bytes(),
                )?;
            }
        }
    }
    run.finish(args, &config)
}
