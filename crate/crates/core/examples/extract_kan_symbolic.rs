//! Turns a KAN actor into a closed-form controller: every activation is
//! fitted with an affine-wrapped basis function, weak inputs are pruned, and
//! the sum is printed as an equation.
//!
//! The actor here has planted activations so the result is known in
//! advance; `kanlb extract --method kan-symbolic` does the same on a trained
//! checkpoint.
//!
//! ```text
//! cargo run --release --example extract_kan_symbolic
//! ```

use kanlb::neural::{KanActivation, KanLayer, SplineGrid};
use kanlb::simnet::{ObsVector, OBS_DIM};
use kanlb::symbolic::{extract_kan_symbolic, AffineGrid, Expr, KanSymbolicReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn planted_actor() -> KanLayer {
    let grid = SplineGrid::default();
    let mut layer = KanLayer::zeros(OBS_DIM, 1, grid);
    let idx = |name| ObsVector::field_index(name).expect("known field");
    *layer.activation_mut(0, idx("lambda")) = KanActivation::fit_to(grid, |x| 0.6 - 0.5 * x, 400);
    *layer.activation_mut(0, idx("l_i_x10")) = KanActivation::fit_to(grid, |x| -0.4 * x * x, 400);
    *layer.activation_mut(0, idx("u_m")) = KanActivation::fit_to(grid, |x| 0.2 * (2.0 * x).tanh(), 400);
    // a faint input that the importance threshold removes
    *layer.activation_mut(0, idx("d_m_x10")) = KanActivation::fit_to(grid, |x| 0.001 * x, 400);
    layer
}

pub fn run_example() -> kanlb::Result<(Expr, KanSymbolicReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let states: Vec<[f64; OBS_DIM]> = (0..2000)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..1.3)))
        .collect();
    extract_kan_symbolic(&planted_actor(), &states, 0.05, &AffineGrid::default())
}

#[allow(dead_code)]
fn main() -> kanlb::Result<()> {
    let (expr, report) = run_example()?;
    for t in &report.terms {
        println!(
            "{:>12}  importance {:.4}  R² {:.5}  {}",
            ObsVector::FIELD_NAMES[t.input],
            t.fit.importance,
            t.fit.r_squared,
            if t.retained { "kept" } else { "pruned" }
        );
    }
    println!("\naction = {}", expr.to_infix());
    println!("fidelity R² {:.5}", report.fidelity_r_squared);
    Ok(())
}
