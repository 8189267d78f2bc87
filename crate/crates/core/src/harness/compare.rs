use serde::{Deserialize, Serialize};

use super::eval::{EvalReport, MeanStd};
use crate::{Error, Result};

pub const COMPARISON_SCHEMA: &str = "kanlb-comparison/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy_id: String,
    pub reward_utility: MeanStd,
    pub reward_loss: MeanStd,
    pub no_loss_fraction: f64,
    pub utility_above_08: f64,
    pub best_utility: bool,
    pub best_loss: bool,
}

/// Policies by summed-reward columns over one shared seed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: String,
    pub episodes: usize,
    pub seed_base: u64,
    pub rows: Vec<ComparisonRow>,
}

fn argmax(v: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.enumerate() {
        if best.is_none_or(|(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best.map(|(i, _)| i)
}

/// Builds the comparison table. Refuses reports that were not evaluated on
/// the same episodes, since their differences would be confounded.
pub fn compare(reports: &[EvalReport]) -> Result<Comparison> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Config("nothing to compare".into()))?;
    for r in &reports[1..] {
        if r.episodes() != first.episodes() || r.config.episodes != first.config.episodes {
            return Err(Error::Confounded(format!(
                "'{}' ran {} episodes but '{}' ran {}",
                r.policy_id,
                r.episodes(),
                first.policy_id,
                first.episodes()
            )));
        }
        if r.seed_base() != first.seed_base() {
            return Err(Error::Confounded(format!(
                "'{}' used seed base {} but '{}' used {}",
                r.policy_id,
                r.seed_base(),
                first.policy_id,
                first.seed_base()
            )));
        }
        if r.config.params != first.config.params {
            return Err(Error::Confounded(format!(
                "'{}' and '{}' were evaluated with different simulator parameters",
                r.policy_id, first.policy_id
            )));
        }
    }
    let best_u = argmax(reports.iter().map(|r| r.summary.reward_utility.mean));
    let best_l = argmax(reports.iter().map(|r| r.summary.reward_loss.mean));
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| ComparisonRow {
            policy_id: r.policy_id.clone(),
            reward_utility: r.summary.reward_utility,
            reward_loss: r.summary.reward_loss,
            no_loss_fraction: r.summary.no_loss_fraction,
            utility_above_08: r.ccdf.utility.value_at(0.8),
            best_utility: best_u == Some(i),
            best_loss: best_l == Some(i),
        })
        .collect();
    Ok(Comparison {
        schema_version: COMPARISON_SCHEMA.to_string(),
        episodes: first.episodes(),
        seed_base: first.seed_base(),
        rows,
    })
}

impl Comparison {
    pub fn row(&self, policy_id: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.policy_id == policy_id)
    }

    /// Plain-text table in the usual mean ± std layout; best column values
    /// are starred.
    pub fn render_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.policy_id.len()).max().unwrap_or(6).max(6);
        let mut out = format!(
            "{:<width$}  {:>20}  {:>20}  {:>8}  {:>8}\n",
            "policy", "utility reward", "loss reward", "no-loss", "U>0.8"
        );
        for r in &self.rows {
            let cell = |m: &MeanStd, best: bool| format!("{}{:.3} ± {:.3}", if best { "*" } else { "" }, m.mean, m.std);
            out.push_str(&format!(
                "{:<width$}  {:>20}  {:>20}  {:>8.3}  {:>8.3}\n",
                r.policy_id,
                cell(&r.reward_utility, r.best_utility),
                cell(&r.reward_loss, r.best_loss),
                r.no_loss_fraction,
                r.utility_above_08
            ));
        }
        out
    }
}
