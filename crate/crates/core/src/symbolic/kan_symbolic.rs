use serde::{Deserialize, Serialize};

use super::expr::{Expr, Func};
use super::fit::{fit_activation, r_squared, ActivationFit, AffineGrid};
use crate::neural::{clamp_unit, KanLayer};
use crate::simnet::{ObsVector, OBS_DIM};
use crate::{Error, Result};

pub const DEFAULT_IMPORTANCE_THRESHOLD: f64 = 0.05;

/// Observed inputs and activation outputs of one KAN edge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivationSamples {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Per-input samples of output `0` of `layer` over `states`.
pub fn sample_activations(layer: &KanLayer, states: &[[f64; OBS_DIM]]) -> Result<Vec<ActivationSamples>> {
    if states.is_empty() {
        return Err(Error::Extraction("no states to sample activations from".into()));
    }
    let mut out = vec![ActivationSamples::default(); layer.in_dim];
    for s in states {
        for (p, y) in layer.terms(0, s).into_iter().enumerate() {
            out[p].xs.push(s[p]);
            out[p].ys.push(y);
        }
    }
    Ok(out)
}

/// States on a uniform per-input grid, for sampling activations
/// independently of any policy. Input `p` sweeps `ranges[p]` while the other
/// inputs stay at their range midpoints.
pub fn uniform_grid_states(ranges: &[(f64, f64); OBS_DIM], points: usize) -> Vec<[f64; OBS_DIM]> {
    let mid: Vec<f64> = ranges.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut out = Vec::with_capacity(points * OBS_DIM);
    for i in 0..points {
        let t = i as f64 / (points.max(2) - 1) as f64;
        let s: [f64; OBS_DIM] = std::array::from_fn(|p| mid[p]);
        for p in 0..OBS_DIM {
            let mut v = s;
            v[p] = ranges[p].0 + t * (ranges[p].1 - ranges[p].0);
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub input: usize,
    pub field: String,
    pub fit: ActivationFit,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanSymbolicReport {
    pub importance_threshold: f64,
    pub terms: Vec<TermReport>,
    /// Mean contribution of the pruned terms, folded into the constant.
    pub pruned_offset: f64,
    pub expression: String,
    pub sexpr: String,
    /// R² between the extracted expression and the clamped KAN output on the
    /// sampled states.
    pub fidelity_r_squared: f64,
}

/// Fits every activation of output `0`, prunes inputs whose importance is
/// below `threshold * max importance`, and sums the retained fitted terms.
/// Pruned terms are replaced by their mean, so only their variation is
/// dropped.
pub fn extract_kan_symbolic(
    layer: &KanLayer,
    states: &[[f64; OBS_DIM]],
    threshold: f64,
    grid: &AffineGrid,
) -> Result<(Expr, KanSymbolicReport)> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::Config(format!("importance threshold must be >= 0, got {threshold}")));
    }
    let samples = sample_activations(layer, states)?;
    let fits: Vec<ActivationFit> = samples
        .iter()
        .enumerate()
        .map(|(p, s)| fit_activation(p, &s.xs, &s.ys, &Func::ALL, grid))
        .collect::<Result<_>>()?;
    let max_importance = fits.iter().map(|f| f.importance).fold(0.0, f64::max);
    let cutoff = threshold * max_importance;
    let retained: Vec<bool> = fits.iter().map(|f| f.importance >= cutoff).collect();
    if !retained.iter().any(|&r| r) {
        return Err(Error::Extraction(format!(
            "all inputs pruned at threshold {threshold}; lower the threshold"
        )));
    }
    let bias = layer.bias.as_ref().map_or(0.0, |b| b[0]);
    let mut pruned_offset = 0.0;
    let mut terms = Vec::new();
    for (f, &keep) in fits.iter().zip(&retained) {
        if keep {
            terms.push(f.to_expr());
        } else {
            pruned_offset += samples[f.input].ys.iter().sum::<f64>() / samples[f.input].ys.len() as f64;
        }
    }
    let offset = pruned_offset + bias;
    if offset != 0.0 || terms.is_empty() {
        terms.push(Expr::Const(offset));
    }
    let expr = Expr::sum(terms);
    let pred: Vec<f64> = states.iter().map(|s| expr.eval(s)).collect();
    let target: Vec<f64> = states.iter().map(|s| clamp_unit(layer.forward(s)[0])).collect();
    let report = KanSymbolicReport {
        importance_threshold: threshold,
        terms: fits
            .into_iter()
            .zip(retained)
            .map(|(fit, retained)| TermReport {
                input: fit.input,
                field: ObsVector::FIELD_NAMES[fit.input].to_string(),
                fit,
                retained,
            })
            .collect(),
        pruned_offset,
        expression: expr.to_infix(),
        sexpr: expr.to_sexpr(),
        fidelity_r_squared: r_squared(&pred, &target),
    };
    Ok((expr, report))
}
