use serde::{Deserialize, Serialize};

use super::expr::{Expr, Func};
use crate::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 20;

/// Fitted form of one activation: `c * f(a * x + b) + d`, or a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationFit {
    pub input: usize,
    /// `None` for a constant fit.
    pub basis: Option<Func>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub r_squared: f64,
    /// Population standard deviation of the activation over the samples.
    pub importance: f64,
}

impl ActivationFit {
    pub fn is_constant(&self) -> bool {
        self.basis.is_none()
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.basis {
            None => self.d,
            Some(f) => self.c * f.apply(self.a * x + self.b) + self.d,
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self.basis {
            None => Expr::Const(self.d),
            Some(f) => Expr::affine(f, self.a, self.b, self.c, self.d, Expr::input(self.input)),
        }
    }
}

/// Search grid for the inner affine map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub b_steps: usize,
    /// Points per axis of the refinement grid around the best cell.
    pub refine_steps: usize,
}

impl Default for AffineGrid {
    fn default() -> Self {
        Self {
            a_min: 0.1,
            a_max: 5.0,
            a_steps: 32,
            b_min: -2.0,
            b_max: 2.0,
            b_steps: 33,
            refine_steps: 9,
        }
    }
}

impl AffineGrid {
    fn a_values(&self) -> Vec<f64> {
        let (l0, l1) = (self.a_min.ln(), self.a_max.ln());
        (0..self.a_steps)
            .map(|i| (l0 + (l1 - l0) * i as f64 / (self.a_steps - 1) as f64).exp())
            .collect()
    }

    fn b_values(&self) -> Vec<f64> {
        linspace(self.b_min, self.b_max, self.b_steps)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn population_std(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// `1 - SS_res / SS_tot`, defined as 1 when the target has no variance and
/// is matched exactly (and 0 when it is not).
pub fn r_squared(pred: &[f64], target: &[f64]) -> f64 {
    let m = mean(target);
    let ss_tot: f64 = target.iter().map(|y| (y - m).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(target).map(|(p, y)| (y - p).powi(2)).sum();
    let scale = target.len() as f64 * m.abs().max(1.0).powi(2);
    if ss_tot <= 1e-24 * scale {
        return if ss_res <= 1e-24 * scale { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Least-squares `(c, d, ss_res)` for `y ~ c * g + d`.
fn linear_fit(g: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = g.len() as f64;
    let (mg, my) = (mean(g), mean(y));
    let sgg: f64 = g.iter().map(|v| (v - mg).powi(2)).sum();
    if !sgg.is_finite() || sgg <= 1e-12 * n.max(1.0) {
        return None;
    }
    let sgy: f64 = g.iter().zip(y).map(|(a, b)| (a - mg) * (b - my)).sum();
    let c = sgy / sgg;
    let d = my - c * mg;
    let ss: f64 = g.iter().zip(y).map(|(a, b)| (b - c * a - d).powi(2)).sum();
    ss.is_finite().then_some((c, d, ss))
}

struct Candidate {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    ss: f64,
}

fn evaluate(func: Func, a: f64, b: f64, xs: &[f64], ys: &[f64]) -> Option<Candidate> {
    let g: Vec<f64> = xs.iter().map(|x| func.apply(a * x + b)).collect();
    let (c, d, ss) = linear_fit(&g, ys)?;
    Some(Candidate { a, b, c, d, ss })
}

fn better(new: &Option<Candidate>, best: &Option<Candidate>) -> bool {
    match (new, best) {
        (Some(n), Some(b)) => n.ss < b.ss,
        (Some(_), None) => true,
        _ => false,
    }
}

fn search_basis(func: Func, xs: &[f64], ys: &[f64], grid: &AffineGrid) -> Option<Candidate> {
    if func == Func::Identity {
        // the inner map is redundant for a linear basis
        return evaluate(func, 1.0, 0.0, xs, ys);
    }
    let a_vals = grid.a_values();
    let b_vals = grid.b_values();
    let mut best: Option<Candidate> = None;
    let (mut ia, mut ib) = (0, 0);
    for (i, &a) in a_vals.iter().enumerate() {
        for (j, &b) in b_vals.iter().enumerate() {
            let cand = evaluate(func, a, b, xs, ys);
            if better(&cand, &best) {
                best = cand;
                (ia, ib) = (i, j);
            }
        }
    }
    best.as_ref()?;
    // one refinement pass over the neighbouring cells
    let a_lo = a_vals[ia.saturating_sub(1)];
    let a_hi = a_vals[(ia + 1).min(a_vals.len() - 1)];
    let b_lo = b_vals[ib.saturating_sub(1)];
    let b_hi = b_vals[(ib + 1).min(b_vals.len() - 1)];
    for a in linspace(a_lo, a_hi, grid.refine_steps) {
        for b in linspace(b_lo, b_hi, grid.refine_steps) {
            let cand = evaluate(func, a, b, xs, ys);
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    best
}

/// Fits `c * f(a * x + b) + d` for every basis function and keeps the one
/// with the highest R². Samples without input or output variance give a
/// constant fit.
pub fn fit_activation(input: usize, xs: &[f64], ys: &[f64], basis: &[Func], grid: &AffineGrid) -> Result<ActivationFit> {
    if xs.len() != ys.len() {
        return Err(Error::Extraction("sample arrays differ in length".into()));
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::Extraction(format!(
            "activation {input}: need at least {MIN_FIT_SAMPLES} samples, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Extraction(format!("activation {input}: non-finite samples")));
    }
    let importance = population_std(ys);
    let constant = ActivationFit {
        input,
        basis: None,
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: mean(ys),
        // a constant target is fitted exactly by convention
        r_squared: if importance <= 1e-12 { 1.0 } else { 0.0 },
        importance,
    };
    let x_spread = population_std(xs);
    if x_spread <= 1e-12 || importance <= 1e-12 {
        return Ok(constant);
    }
    let ss_tot: f64 = ys.iter().map(|y| (y - mean(ys)).powi(2)).sum();
    let mut best: Option<(Func, Candidate)> = None;
    for &func in basis {
        if let Some(c) = search_basis(func, xs, ys, grid) {
            if best.as_ref().is_none_or(|(_, b)| c.ss < b.ss) {
                best = Some((func, c));
            }
        }
    }
    Ok(match best {
        None => constant,
        Some((func, c)) => ActivationFit {
            input,
            basis: Some(func),
            a: c.a,
            b: c.b,
            c: c.c,
            d: c.d,
            r_squared: 1.0 - c.ss / ss_tot,
            importance,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        linspace(lo, hi, n)
    }

    #[test]
    fn square_is_recovered() {
        let x = xs(200, 0.0, 1.0);
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let f = fit_activation(0, &x, &y, &Func::ALL, &AffineGrid::default()).unwrap();
        assert_eq!(f.basis, Some(Func::Square));
        assert!(f.r_squared > 0.999);
    }

    #[test]
    fn planted_tanh_parameters_within_five_percent() {
        let x = xs(300, -1.0, 2.0);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * (2.0 * v - 1.0).tanh() + 0.5).collect();
        let f = fit_activation(2, &x, &y, &Func::ALL, &AffineGrid::default()).unwrap();
        assert_eq!(f.basis, Some(Func::Tanh));
        for (got, want) in [(f.a, 2.0), (f.b, -1.0), (f.c, 3.0), (f.d, 0.5)] {
            assert!((got - want).abs() <= 0.05 * want.abs(), "got {got}, want {want}");
        }
    }

    #[test]
    fn constant_samples_give_constant_fit() {
        let x = xs(50, 0.0, 1.0);
        let y = vec![0.7; 50];
        let f = fit_activation(1, &x, &y, &Func::ALL, &AffineGrid::default()).unwrap();
        assert!(f.is_constant());
        assert_eq!(f.r_squared, 1.0);
        assert!((f.d - 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_input_variance_is_flagged_constant() {
        let x = vec![0.4; 30];
        let y: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let f = fit_activation(0, &x, &y, &Func::ALL, &AffineGrid::default()).unwrap();
        assert!(f.is_constant());
    }

    #[test]
    fn too_few_samples_rejected() {
        let x = xs(10, 0.0, 1.0);
        assert!(fit_activation(0, &x, &x, &Func::ALL, &AffineGrid::default()).is_err());
    }
}
