//! B-spline bases via the Cox-de Boor recursion.
//!
//! `order` follows the textbook convention: order 1 is piecewise constant,
//! order 4 is cubic (degree = order - 1). A knot vector of length `m` yields
//! `m - order` basis functions.

use serde::{Deserialize, Serialize};

/// All basis values at `x`. Order-1 bases are the half-open indicators
/// `[t_j, t_{j+1})`.
pub fn bspline_basis(x: f64, knots: &[f64], order: usize) -> Vec<f64> {
    assert!(order >= 1, "order must be at least 1");
    assert!(knots.len() > order, "need more knots than the order");
    let m = knots.len();
    let mut b: Vec<f64> = (0..m - 1)
        .map(|j| if knots[j] <= x && x < knots[j + 1] { 1.0 } else { 0.0 })
        .collect();
    for k in 2..=order {
        // b holds order k-1 values, length m - (k - 1)
        let next: Vec<f64> = (0..m - k)
            .map(|j| {
                let left = ratio(x - knots[j], knots[j + k - 1] - knots[j]) * b[j];
                let right = ratio(knots[j + k] - x, knots[j + k] - knots[j + 1]) * b[j + 1];
                left + right
            })
            .collect();
        b = next;
    }
    b
}

/// Basis values and their first derivatives with respect to `x`.
pub fn bspline_basis_with_derivative(x: f64, knots: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let value = bspline_basis(x, knots, order);
    if order == 1 {
        return (value.clone(), vec![0.0; value.len()]);
    }
    let lower = bspline_basis(x, knots, order - 1);
    let p = (order - 1) as f64;
    let deriv = (0..value.len())
        .map(|j| {
            p * ratio(lower[j], knots[j + order - 1] - knots[j])
                - p * ratio(lower[j + 1], knots[j + order] - knots[j + 1])
        })
        .collect();
    (value, deriv)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Uniform grid on `[lo, hi]` extended by `degree` knots on each side, so the
/// knot vector is strictly increasing and the `intervals + degree` bases form
/// a partition of unity on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineGrid {
    pub lo: f64,
    pub hi: f64,
    pub intervals: usize,
    pub degree: usize,
}

impl Default for SplineGrid {
    fn default() -> Self {
        Self {
            lo: -1.0,
            hi: 2.0,
            intervals: 5,
            degree: 3,
        }
    }
}

impl SplineGrid {
    pub fn order(&self) -> usize {
        self.degree + 1
    }

    pub fn num_basis(&self) -> usize {
        self.intervals + self.degree
    }

    pub fn knots(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / self.intervals as f64;
        (0..=self.intervals + 2 * self.degree)
            .map(|j| self.lo + (j as f64 - self.degree as f64) * h)
            .collect()
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(crate::Error::Config(format!("bad grid range [{}, {}]", self.lo, self.hi)));
        }
        if self.intervals == 0 {
            return Err(crate::Error::Config("grid needs at least one interval".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_interval_indicator() {
        let grid = SplineGrid {
            degree: 0,
            ..SplineGrid::default()
        };
        let knots = grid.knots();
        for (k, w) in knots.windows(2).enumerate() {
            let mid = 0.5 * (w[0] + w[1]);
            let b = bspline_basis(mid, &knots, 1);
            for (j, v) in b.iter().enumerate() {
                assert_eq!(*v, if j == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn cubic_partition_of_unity_including_endpoints() {
        let grid = SplineGrid::default();
        let knots = grid.knots();
        for i in 0..=300 {
            let x = grid.lo + (grid.hi - grid.lo) * i as f64 / 300.0;
            let b = bspline_basis(x, &knots, grid.order());
            assert_eq!(b.len(), grid.num_basis());
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-9, "x = {x}");
            assert!(b.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let grid = SplineGrid::default();
        let knots = grid.knots();
        let h = 1e-6;
        for x in [-0.93, -0.2, 0.1, 0.77, 1.5, 1.99] {
            let (_, d) = bspline_basis_with_derivative(x, &knots, 4);
            let up = bspline_basis(x + h, &knots, 4);
            let dn = bspline_basis(x - h, &knots, 4);
            for j in 0..d.len() {
                let fd = (up[j] - dn[j]) / (2.0 * h);
                assert!((fd - d[j]).abs() < 1e-6, "x={x} j={j} {fd} vs {}", d[j]);
            }
        }
    }

    #[test]
    fn knots_strictly_increasing() {
        let k = SplineGrid::default().knots();
        assert_eq!(k.len(), 5 + 2 * 3 + 1);
        assert!(k.windows(2).all(|w| w[1] > w[0]));
    }
}
