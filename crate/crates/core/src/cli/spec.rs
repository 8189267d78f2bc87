//! Policy specs on the command line:
//!
//! * `builtin:eq3` .. `builtin:eq6`, `builtin:el-baseline`
//! * `report:<path>`: a previously written evaluation report
//! * a checkpoint JSON file
//! * an expression file (s-expression or infix)

use std::path::Path;

use crate::harness::{read_report_json, ElBaseline, EvalReport, ExpressionPolicy, NeuralPolicy, Policy};
use crate::neural::{Checkpoint, CHECKPOINT_SCHEMA};
use crate::symbolic::{load_expression, ReferenceId};
use crate::{Error, Result};

pub enum Resolved {
    Policy(Box<dyn Policy>),
    Report(Box<EvalReport>),
}

pub fn resolve_spec(spec: &str) -> Result<Resolved> {
    let unresolved = |why: String| Error::UnresolvedPolicy(format!("'{spec}': {why}"));
    if let Some(name) = spec.strip_prefix("builtin:") {
        if name == "el-baseline" {
            return Ok(Resolved::Policy(Box::new(ElBaseline::default())));
        }
        let id: ReferenceId = name
            .parse()
            .map_err(|_| unresolved("unknown builtin (expected eq3, eq4, eq5, eq6 or el-baseline)".into()))?;
        return Ok(Resolved::Policy(Box::new(ExpressionPolicy::reference(id))));
    }
    if let Some(path) = spec.strip_prefix("report:") {
        let r = read_report_json(Path::new(path)).map_err(|e| unresolved(e.to_string()))?;
        return Ok(Resolved::Report(Box::new(r)));
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(unresolved("no such file and not a builtin".into()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| unresolved(e.to_string()))?;
    if text.contains(CHECKPOINT_SCHEMA) {
        let ck = Checkpoint::from_json(&text).map_err(|e| unresolved(e.to_string()))?;
        return Ok(Resolved::Policy(Box::new(NeuralPolicy::from_checkpoint(spec, &ck))));
    }
    let expr = load_expression(path).map_err(|e| unresolved(e.to_string()))?;
    Ok(Resolved::Policy(Box::new(ExpressionPolicy::new(spec, expr))))
}
