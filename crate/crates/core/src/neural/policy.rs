use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::kan::KanLayer;
use super::mlp::{Mlp, MlpCache};
use super::Differentiable;
use crate::Error;

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Kan,
    Mlp,
}

impl ActorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActorKind::Kan => "kan",
            ActorKind::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for ActorKind {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "kan" => Ok(ActorKind::Kan),
            "mlp" => Ok(ActorKind::Mlp),
            other => Err(Error::Config(format!("unknown actor kind '{other}'"))),
        }
    }
}

/// Mean network of the actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActorNet {
    Kan(KanLayer),
    Mlp(Mlp),
}

impl ActorNet {
    pub fn kind(&self) -> ActorKind {
        match self {
            ActorNet::Kan(_) => ActorKind::Kan,
            ActorNet::Mlp(_) => ActorKind::Mlp,
        }
    }

    pub fn as_kan(&self) -> Option<&KanLayer> {
        match self {
            ActorNet::Kan(k) => Some(k),
            ActorNet::Mlp(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ActorCache {
    Kan(Vec<f64>),
    Mlp(MlpCache),
}

impl Differentiable for ActorNet {
    type Cache = ActorCache;

    fn num_params(&self) -> usize {
        match self {
            ActorNet::Kan(n) => n.num_params(),
            ActorNet::Mlp(n) => n.num_params(),
        }
    }

    fn params(&self) -> Vec<f64> {
        match self {
            ActorNet::Kan(n) => n.params(),
            ActorNet::Mlp(n) => n.params(),
        }
    }

    fn set_params(&mut self, params: &[f64]) {
        match self {
            ActorNet::Kan(n) => n.set_params(params),
            ActorNet::Mlp(n) => n.set_params(params),
        }
    }

    fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, ActorCache) {
        match self {
            ActorNet::Kan(n) => {
                let (y, c) = n.forward_cached(x);
                (y, ActorCache::Kan(c))
            }
            ActorNet::Mlp(n) => {
                let (y, c) = n.forward_cached(x);
                (y, ActorCache::Mlp(c))
            }
        }
    }

    fn backward(&self, cache: &ActorCache, upstream: &[f64], grad: &mut [f64]) -> Vec<f64> {
        match (self, cache) {
            (ActorNet::Kan(n), ActorCache::Kan(c)) => n.backward(c, upstream, grad),
            (ActorNet::Mlp(n), ActorCache::Mlp(c)) => n.backward(c, upstream, grad),
            _ => panic!("actor cache does not match the network"),
        }
    }
}

/// Gaussian policy over a scalar action: `mean = clamp(net(obs), -1, 1)`
/// with a state-independent learnable `log_std`.
///
/// As a [`Differentiable`] it maps `obs` to `[mean, log_std]`; parameters are
/// the mean network's followed by `log_std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy<N> {
    pub mean_net: N,
    pub log_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySample {
    pub mean: f64,
    /// Unclipped draw; log-probabilities refer to this value.
    pub action: f64,
    pub log_prob: f64,
    /// What the environment receives: the draw clipped to `[-1, 1]`.
    pub env_action: f64,
}

pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Clamp derivative: 1 strictly inside `(-1, 1)`, 0 elsewhere.
pub fn clamp_unit_grad(x: f64) -> f64 {
    if x > -1.0 && x < 1.0 {
        1.0
    } else {
        0.0
    }
}

pub fn normal_log_density(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) * (-log_std).exp();
    -0.5 * z * z - log_std - HALF_LOG_2PI
}

impl<N: Differentiable> GaussianPolicy<N> {
    pub fn new(mean_net: N, log_std: f64) -> Self {
        Self { mean_net, log_std }
    }

    pub fn raw_mean(&self, obs: &[f64]) -> f64 {
        self.mean_net.forward_cached(obs).0[0]
    }

    pub fn mean(&self, obs: &[f64]) -> f64 {
        clamp_unit(self.raw_mean(obs))
    }

    pub fn std(&self) -> f64 {
        self.log_std.exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> PolicySample {
        let mean = self.mean(obs);
        let eps: f64 = StandardNormal.sample(rng);
        let action = mean + self.std() * eps;
        PolicySample {
            mean,
            action,
            log_prob: normal_log_density(action, mean, self.log_std),
            env_action: clamp_unit(action),
        }
    }

    pub fn log_prob(&self, obs: &[f64], action: f64) -> f64 {
        normal_log_density(action, self.mean(obs), self.log_std)
    }

    pub fn entropy(&self) -> f64 {
        0.5 + HALF_LOG_2PI + self.log_std
    }

    /// Log-density of `action` and, accumulated into `grad`, `upstream`
    /// times its gradient with respect to all parameters.
    pub fn log_prob_backward(&self, obs: &[f64], action: f64, upstream: f64, grad: &mut [f64]) -> f64 {
        let (out, cache) = self.forward_cached(obs);
        let (mean, log_std) = (out[0], out[1]);
        let inv_var = (-2.0 * log_std).exp();
        let diff = action - mean;
        let dmean = diff * inv_var;
        let dlog_std = diff * diff * inv_var - 1.0;
        self.backward(&cache, &[upstream * dmean, upstream * dlog_std], grad);
        normal_log_density(action, mean, log_std)
    }
}

impl<N: Differentiable> Differentiable for GaussianPolicy<N> {
    type Cache = (f64, N::Cache);

    fn num_params(&self) -> usize {
        self.mean_net.num_params() + 1
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.mean_net.params();
        p.push(self.log_std);
        p
    }

    fn set_params(&mut self, params: &[f64]) {
        let n = self.mean_net.num_params();
        self.mean_net.set_params(&params[..n]);
        self.log_std = params[n];
    }

    fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, Self::Cache) {
        let (raw, cache) = self.mean_net.forward_cached(x);
        (vec![clamp_unit(raw[0]), self.log_std], (raw[0], cache))
    }

    fn backward(&self, cache: &Self::Cache, upstream: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let n = self.mean_net.num_params();
        let (raw, inner) = cache;
        let d_raw = upstream[0] * clamp_unit_grad(*raw);
        let dx = self.mean_net.backward(inner, &[d_raw], &mut grad[..n]);
        grad[n] += upstream[1];
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::neural::{Mlp, SplineGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(log_std: f64) -> GaussianPolicy<ActorNet> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        GaussianPolicy::new(ActorNet::Mlp(Mlp::orthogonal(&[10, 8, 1], 1.0, &mut rng)), log_std)
    }

    #[test]
    fn log_prob_at_mean() {
        let p = policy(-0.7);
        let obs = [0.1; 10];
        let m = p.mean(&obs);
        assert!((p.log_prob(&obs, m) - (0.7 - 0.5 * (2.0 * PI).ln())).abs() < 1e-12);
    }

    #[test]
    fn vanishing_std_returns_the_mean() {
        let p = policy(-200.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs = [0.4; 10];
        let s = p.sample(&obs, &mut rng);
        assert_eq!(s.env_action, p.mean(&obs));
    }

    #[test]
    fn sample_std_matches() {
        let p = policy(-0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = [0.2; 10];
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| p.sample(&obs, &mut rng).action).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() / p.std() - 1.0).abs() < 0.02);
    }

    #[test]
    fn clamp_applies_before_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut kan = KanLayer::zeros(10, 1, SplineGrid::default());
        kan.bias = Some(vec![5.0]);
        let p = GaussianPolicy::new(ActorNet::Kan(kan), -100.0);
        let s = p.sample(&[0.0; 10], &mut rng);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.env_action, 1.0);
    }
}
