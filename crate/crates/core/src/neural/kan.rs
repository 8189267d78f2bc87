//! Learnable univariate activations and the one-layer KAN built from them.
//!
//! Each activation is `w_base * silu(x) + w_spline * spline(x)` where the
//! spline is a cubic B-spline on a fixed grid. Outside the grid the spline
//! continues linearly with its boundary slope.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::bspline::{bspline_basis_with_derivative, SplineGrid};
use super::Differentiable;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

pub fn silu_derivative(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Spline value, slope and coefficient sensitivities at one input.
struct SplineEval {
    value: f64,
    slope: f64,
    dcoeff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanActivation {
    pub grid: SplineGrid,
    pub spline_coeffs: Vec<f64>,
    pub w_base: f64,
    pub w_spline: f64,
}

impl KanActivation {
    pub fn zeros(grid: SplineGrid) -> Self {
        Self {
            grid,
            spline_coeffs: vec![0.0; grid.num_basis()],
            w_base: 0.0,
            w_spline: 0.0,
        }
    }

    pub fn random<R: Rng + ?Sized>(grid: SplineGrid, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, 0.1).expect("valid std");
        Self {
            grid,
            spline_coeffs: (0..grid.num_basis()).map(|_| normal.sample(rng)).collect(),
            w_base: 1.0,
            w_spline: 1.0,
        }
    }

    pub const fn params_per(grid_basis: usize) -> usize {
        grid_basis + 2
    }

    fn spline_eval(&self, x: f64, knots: &[f64]) -> SplineEval {
        let (anchor, offset) = if x < self.grid.lo {
            (self.grid.lo, x - self.grid.lo)
        } else if x > self.grid.hi {
            (self.grid.hi, x - self.grid.hi)
        } else {
            (x, 0.0)
        };
        let (b, db) = bspline_basis_with_derivative(anchor, knots, self.grid.order());
        let dcoeff: Vec<f64> = b.iter().zip(&db).map(|(v, d)| v + d * offset).collect();
        let value = self.spline_coeffs.iter().zip(&dcoeff).map(|(c, w)| c * w).sum();
        let slope = self.spline_coeffs.iter().zip(&db).map(|(c, d)| c * d).sum();
        SplineEval { value, slope, dcoeff }
    }

    pub fn spline(&self, x: f64) -> f64 {
        self.spline_eval(x, &self.grid.knots()).value
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.forward_with_knots(x, &self.grid.knots())
    }

    fn forward_with_knots(&self, x: f64, knots: &[f64]) -> f64 {
        self.w_base * silu(x) + self.w_spline * self.spline_eval(x, knots).value
    }

    /// Accumulates `upstream * dphi/dparam` into `grad` (coefficients, then
    /// `w_base`, then `w_spline`) and returns `dphi/dx`.
    fn backward_with_knots(&self, x: f64, knots: &[f64], upstream: f64, grad: &mut [f64]) -> f64 {
        let s = self.spline_eval(x, knots);
        let n = self.spline_coeffs.len();
        for (g, d) in grad[..n].iter_mut().zip(&s.dcoeff) {
            *g += upstream * self.w_spline * d;
        }
        grad[n] += upstream * silu(x);
        grad[n + 1] += upstream * s.value;
        self.w_base * silu_derivative(x) + self.w_spline * s.slope
    }

    /// Least-squares spline coefficients for `target` sampled on `[lo, hi]`,
    /// with `w_base = 0` and `w_spline = 1`.
    pub fn fit_to(grid: SplineGrid, target: impl Fn(f64) -> f64, samples: usize) -> Self {
        let knots = grid.knots();
        let n = grid.num_basis();
        let mut rows = Vec::with_capacity(samples);
        let mut ys = Vec::with_capacity(samples);
        for i in 0..samples {
            let x = grid.lo + (grid.hi - grid.lo) * i as f64 / (samples - 1) as f64;
            let (b, _) = bspline_basis_with_derivative(x, &knots, grid.order());
            rows.push(b);
            ys.push(target(x));
        }
        let coeffs = super::linalg::least_squares(&rows, &ys, n, 1e-12);
        Self {
            grid,
            spline_coeffs: coeffs,
            w_base: 0.0,
            w_spline: 1.0,
        }
    }
}

/// Grid of `out_dim x in_dim` activations; output `q` is
/// `sum_p phi_{q,p}(x_p)` plus an optional bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub grid: SplineGrid,
    /// Row-major by output: index `q * in_dim + p`.
    pub activations: Vec<KanActivation>,
    pub bias: Option<Vec<f64>>,
}

impl KanLayer {
    /// Random activations with the base weight scaled to `1 / in_dim`, so
    /// the summed base terms start inside the clamp of the policy head.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, grid: SplineGrid, rng: &mut R) -> Self {
        let activations = (0..in_dim * out_dim)
            .map(|_| {
                let mut a = KanActivation::random(grid, rng);
                a.w_base /= in_dim as f64;
                a
            })
            .collect();
        Self {
            in_dim,
            out_dim,
            grid,
            activations,
            bias: None,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, grid: SplineGrid) -> Self {
        Self {
            in_dim,
            out_dim,
            grid,
            activations: vec![KanActivation::zeros(grid); in_dim * out_dim],
            bias: None,
        }
    }

    pub fn activation(&self, q: usize, p: usize) -> &KanActivation {
        &self.activations[q * self.in_dim + p]
    }

    pub fn activation_mut(&mut self, q: usize, p: usize) -> &mut KanActivation {
        &mut self.activations[q * self.in_dim + p]
    }

    /// Each summand `phi_{q,p}(x_p)` for output `q`.
    pub fn terms(&self, q: usize, x: &[f64]) -> Vec<f64> {
        let knots = self.grid.knots();
        (0..self.in_dim)
            .map(|p| self.activation(q, p).forward_with_knots(x[p], &knots))
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim);
        (0..self.out_dim)
            .map(|q| {
                let b = self.bias.as_ref().map_or(0.0, |b| b[q]);
                self.terms(q, x).into_iter().sum::<f64>() + b
            })
            .collect()
    }

    fn params_per_activation(&self) -> usize {
        KanActivation::params_per(self.grid.num_basis())
    }
}

impl Differentiable for KanLayer {
    type Cache = Vec<f64>;

    fn num_params(&self) -> usize {
        self.activations.len() * self.params_per_activation() + self.bias.as_ref().map_or(0, Vec::len)
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for a in &self.activations {
            out.extend_from_slice(&a.spline_coeffs);
            out.push(a.w_base);
            out.push(a.w_spline);
        }
        if let Some(b) = &self.bias {
            out.extend_from_slice(b);
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let per = self.params_per_activation();
        for (a, chunk) in self.activations.iter_mut().zip(params.chunks(per)) {
            let n = a.spline_coeffs.len();
            a.spline_coeffs.copy_from_slice(&chunk[..n]);
            a.w_base = chunk[n];
            a.w_spline = chunk[n + 1];
        }
        if let Some(b) = &mut self.bias {
            let off = self.activations.len() * per;
            b.copy_from_slice(&params[off..]);
        }
    }

    fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.forward(x), x.to_vec())
    }

    fn backward(&self, input: &Vec<f64>, upstream: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let knots = self.grid.knots();
        let per = self.params_per_activation();
        let mut dx = vec![0.0; self.in_dim];
        for q in 0..self.out_dim {
            for p in 0..self.in_dim {
                let idx = q * self.in_dim + p;
                let slot = &mut grad[idx * per..(idx + 1) * per];
                dx[p] += upstream[q] * self.activations[idx].backward_with_knots(input[p], &knots, upstream[q], slot);
            }
        }
        if self.bias.is_some() {
            let off = self.activations.len() * per;
            for q in 0..self.out_dim {
                grad[off + q] += upstream[q];
            }
        }
        dx
    }
}
