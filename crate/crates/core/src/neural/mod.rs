//! Differentiable building blocks written from scratch: B-spline bases, KAN
//! activations and layers, MLPs, the Gaussian policy head, Adam, and
//! checkpoints.
//!
//! Gradients are hand-written reverse mode. Every network exposes its
//! parameters as one flat vector, in a fixed order, so optimizers and
//! finite-difference checks can treat all of them alike.

pub mod adam;
pub mod bspline;
pub mod checkpoint;
pub mod kan;
pub mod linalg;
pub mod mlp;
pub mod policy;

pub use adam::{clip_grad_norm, Adam};
pub use bspline::{bspline_basis, bspline_basis_with_derivative, SplineGrid};
pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_SCHEMA};
pub use kan::{silu, KanActivation, KanLayer};
pub use mlp::Mlp;
pub use policy::{clamp_unit, normal_log_density, ActorKind, ActorNet, GaussianPolicy, PolicySample};

use crate::{Error, Result};

pub trait Differentiable {
    /// Intermediates recorded by [`Differentiable::forward_cached`].
    type Cache;

    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]);
    fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, Self::Cache);
    /// Accumulates `upstream . d(output)/d(params)` into `param_grad` and
    /// returns `upstream . d(output)/d(input)`.
    fn backward(&self, cache: &Self::Cache, upstream: &[f64], param_grad: &mut [f64]) -> Vec<f64>;
}

/// One forward/backward pair over a borrowed network.
pub struct Tape<'a, N: Differentiable> {
    net: &'a N,
    cache: Option<N::Cache>,
}

impl<'a, N: Differentiable> Tape<'a, N> {
    pub fn new(net: &'a N) -> Self {
        Self { net, cache: None }
    }

    pub fn forward(&mut self, x: &[f64]) -> Vec<f64> {
        let (y, cache) = self.net.forward_cached(x);
        self.cache = Some(cache);
        y
    }

    /// Returns `(param_grad, input_grad)`.
    pub fn backward(&self, upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        let mut grad = vec![0.0; self.net.num_params()];
        let dx = self.net.backward(cache, upstream, &mut grad);
        Ok((grad, dx))
    }
}
