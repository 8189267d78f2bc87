//! Builds KAN activations by least squares on the cubic B-spline basis and
//! checks the layer gradient against finite differences.
//!
//! ```text
//! cargo run --example kan_activation
//! ```

use kanlb::neural::{Differentiable, KanActivation, KanLayer, SplineGrid};

pub struct ActivationDemo {
    /// Worst `|phi(x) - target(x)|` on `[0, 1.3]`.
    pub fit_error: f64,
    /// Worst relative error of the analytic input gradient.
    pub gradient_error: f64,
}

pub fn run_example() -> ActivationDemo {
    let grid = SplineGrid::default();
    let target = |x: f64| 0.5 * x * x - 0.2 * x;
    let act = KanActivation::fit_to(grid, target, 400);
    let fit_error = (0..=130)
        .map(|k| k as f64 / 100.0)
        .map(|x| (act.forward(x) - target(x)).abs())
        .fold(0.0, f64::max);

    let mut layer = KanLayer::zeros(3, 1, grid);
    *layer.activation_mut(0, 0) = act;
    *layer.activation_mut(0, 1) = KanActivation::fit_to(grid, |x| (0.7 * x).tanh(), 400);
    *layer.activation_mut(0, 2) = KanActivation::fit_to(grid, |x| -0.3 * x, 400);
    let x = [0.4, 1.1, 0.25];
    let (_, cache) = layer.forward_cached(&x);
    let mut grad = vec![0.0; layer.num_params()];
    let dx = layer.backward(&cache, &[1.0], &mut grad);
    let h = 1e-6;
    let gradient_error = (0..3)
        .map(|i| {
            let (mut up, mut down) = (x, x);
            up[i] += h;
            down[i] -= h;
            let fd = (layer.forward(&up)[0] - layer.forward(&down)[0]) / (2.0 * h);
            (dx[i] - fd).abs() / fd.abs().max(1e-6)
        })
        .fold(0.0, f64::max);
    ActivationDemo {
        fit_error,
        gradient_error,
    }
}

#[allow(dead_code)]
fn main() {
    let d = run_example();
    println!("spline fit of 0.5x² - 0.2x: max error {:.2e}", d.fit_error);
    println!("input gradient vs finite differences: max rel. error {:.2e}", d.gradient_error);
}
