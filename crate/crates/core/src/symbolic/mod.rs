//! Symbolic policies: expression trees, the published reference equations,
//! and the two extraction paths from trained actors.
//!
//! * KAN-symbolic fits every edge of a trained one-layer KAN with an
//!   affine-wrapped basis function and sums the important ones.
//! * PPO-DS distills (state, action) samples of any trained policy with a
//!   genetic-programming search over the same operators.
//!
//! Evaluation always clips to `[-1, 1]`; operators are protected so any
//! finite observation gives a finite action.

pub mod distill;
pub mod expr;
pub mod finetune;
pub mod fit;
pub mod kan_symbolic;
pub mod parse;
pub mod reference;

pub use distill::{distill_ppo_ds, expression_mse, DistillConfig, DistillReport, FrontEntry};
pub use expr::{clip_action, BinOp, Expr, Func};
pub use finetune::{finetune_coeffs, FinetuneResult, SymbolicMean};
pub use fit::{fit_activation, population_std, r_squared, ActivationFit, AffineGrid};
pub use kan_symbolic::{
    extract_kan_symbolic, sample_activations, uniform_grid_states, ActivationSamples, KanSymbolicReport, TermReport,
    DEFAULT_IMPORTANCE_THRESHOLD,
};
pub use parse::{parse_infix, parse_sexpr};
pub use reference::{reference_policy, ReferenceId};

use std::path::Path;

use crate::{Error, Result};

/// Reads an expression file: s-expression if it starts with `(` and parses
/// as one, infix otherwise.
pub fn load_expression(path: &Path) -> Result<Expr> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_expression_text(&text)
}

pub fn parse_expression_text(text: &str) -> Result<Expr> {
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let body = body.trim();
    if body.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    if body.starts_with('(') {
        if let Ok(e) = parse_sexpr(body) {
            return Ok(e);
        }
    }
    parse_infix(body)
}
