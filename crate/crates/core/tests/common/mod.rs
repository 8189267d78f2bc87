//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use kanlb::neural::{
    ActorNet, Differentiable, GaussianPolicy, KanActivation, KanLayer, Mlp, SplineGrid,
};
use kanlb::simnet::{EpisodeConfig, LinkId, LoadBalancerEnv, SimParams, StepOutcome, OBS_DIM};
use kanlb::symbolic::clip_action;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;

/// Relative error with a small floor so that gradients that are zero in
/// both computations do not divide by zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn objective_at<N: Differentiable + Clone>(net: &N, params: &[f64], x: &[f64], upstream: &[f64]) -> f64 {
    let mut n = net.clone();
    n.set_params(params);
    n.forward_cached(x).0.iter().zip(upstream).map(|(y, u)| y * u).sum()
}

/// Largest relative error between the analytic parameter and input gradients
/// of `upstream . net(x)` and central finite differences.
pub fn max_gradient_error<N: Differentiable + Clone>(net: &N, x: &[f64], upstream: &[f64]) -> f64 {
    let (_, cache) = net.forward_cached(x);
    let mut grad = vec![0.0; net.num_params()];
    let dx = net.backward(&cache, upstream, &mut grad);
    let base = net.params();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + FD_STEP;
        let plus = objective_at(net, &p, x, upstream);
        p[i] = base[i] - FD_STEP;
        let minus = objective_at(net, &p, x, upstream);
        worst = worst.max(rel_err(grad[i], (plus - minus) / (2.0 * FD_STEP)));
    }
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        xp[i] = x[i] + FD_STEP;
        let plus = objective_at(net, &base, &xp, upstream);
        xp[i] = x[i] - FD_STEP;
        let minus = objective_at(net, &base, &xp, upstream);
        worst = worst.max(rel_err(dx[i], (plus - minus) / (2.0 * FD_STEP)));
    }
    worst
}

/// Largest relative error of the log-density gradient of a Gaussian policy.
pub fn max_log_prob_gradient_error(policy: &GaussianPolicy<ActorNet>, obs: &[f64], action: f64) -> f64 {
    let mut grad = vec![0.0; policy.num_params()];
    policy.log_prob_backward(obs, action, 1.0, &mut grad);
    let base = policy.params();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = policy.clone();
        let mut v = base.clone();
        v[i] = base[i] + FD_STEP;
        p.set_params(&v);
        let plus = p.log_prob(obs, action);
        v[i] = base[i] - FD_STEP;
        p.set_params(&v);
        let minus = p.log_prob(obs, action);
        worst = worst.max(rel_err(grad[i], (plus - minus) / (2.0 * FD_STEP)));
    }
    worst
}

pub fn random_kan<R: Rng>(rng: &mut R, in_dim: usize, out_dim: usize, with_bias: bool) -> KanLayer {
    let grid = SplineGrid::default();
    let coeff = Normal::new(0.0, 0.5).unwrap();
    let mut layer = KanLayer::zeros(in_dim, out_dim, grid);
    for a in layer.activations.iter_mut() {
        *a = KanActivation {
            grid,
            spline_coeffs: (0..grid.num_basis()).map(|_| coeff.sample(rng)).collect(),
            w_base: rng.random_range(-1.5..1.5),
            w_spline: rng.random_range(-1.5..1.5),
        };
    }
    if with_bias {
        layer.bias = Some((0..out_dim).map(|_| rng.random_range(-0.5..0.5)).collect());
    }
    layer
}

pub fn random_input<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // covers the grid and both extrapolation regions
    (0..n).map(|_| rng.random_range(-2.0..3.0)).collect()
}

/// Worst gradient error over `configs` random KAN layers, MLPs and Gaussian
/// policies (one of each per configuration).
pub fn gradient_sweep(configs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for c in 0..configs {
        let in_dim = rng.random_range(1..=10);
        let out_dim = rng.random_range(1..=3);
        let kan = random_kan(&mut rng, in_dim, out_dim, c % 2 == 0);
        let x = random_input(&mut rng, in_dim);
        let up: Vec<f64> = (0..out_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(max_gradient_error(&kan, &x, &up));

        let hidden = rng.random_range(1..=12);
        let sizes = if c % 3 == 0 {
            vec![in_dim, hidden, out_dim]
        } else {
            vec![in_dim, hidden, rng.random_range(1..=12), out_dim]
        };
        let mlp = Mlp::orthogonal(&sizes, rng.random_range(0.1..2.0), &mut rng);
        worst = worst.max(max_gradient_error(&mlp, &x, &up));

        let obs = random_input(&mut rng, 10);
        let net = if c % 2 == 0 {
            ActorNet::Kan(random_kan(&mut rng, 10, 1, false))
        } else {
            ActorNet::Mlp(Mlp::orthogonal(&[10, 8, 8, 1], 0.5, &mut rng))
        };
        let policy = GaussianPolicy::new(net, rng.random_range(-1.0..0.5));
        // keep away from the clamp kink, where the derivative is undefined
        let raw = policy.raw_mean(&obs);
        if (raw.abs() - 1.0).abs() < 1e-3 {
            continue;
        }
        let action = policy.mean(&obs) + rng.random_range(-1.0..1.0);
        worst = worst.max(max_log_prob_gradient_error(&policy, &obs, action));
    }
    worst
}

/// Textbook recursive Cox-de Boor evaluation of a single basis function.
pub fn cox_de_boor(j: usize, order: usize, x: f64, t: &[f64]) -> f64 {
    if order == 1 {
        return if t[j] <= x && x < t[j + 1] { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = t[j + order - 1] - t[j];
    if d1 != 0.0 {
        v += (x - t[j]) / d1 * cox_de_boor(j, order - 1, x, t);
    }
    let d2 = t[j + order] - t[j + 1];
    if d2 != 0.0 {
        v += (t[j + order] - x) / d2 * cox_de_boor(j + 1, order - 1, x, t);
    }
    v
}

/// Brute-force advantage: `sum_k (gamma*lambda)^k delta_{t+k}` with no
/// terminations inside the window.
pub fn brute_force_gae(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let next = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
    let delta: Vec<f64> = (0..n).map(|t| rewards[t] + gamma * next(t) - values[t]).collect();
    (0..n)
        .map(|t| (t..n).map(|k| (gamma * lambda).powi((k - t) as i32) * delta[k]).sum())
        .collect()
}

/// `P(X > x)` by direct counting.
pub fn ccdf_by_counting(samples: &[f64], x: f64) -> f64 {
    samples.iter().filter(|&&s| s > x).count() as f64 / samples.len() as f64
}

/// Steps `episodes` seeded episodes with uniformly random actions and returns
/// the worst relative conservation residual over both links together with
/// the number of steps and whether every range invariant held.
pub fn conservation_sweep(episodes: usize, seed: u64) -> (f64, usize, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = LoadBalancerEnv::new(SimParams::default()).unwrap();
    let q_cap = env.params().queue_capacity_bits();
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    let mut ranges_ok = true;
    for e in 0..episodes {
        env.reset(EpisodeConfig::sample(seed.wrapping_mul(1_000).wrapping_add(e as u64))).unwrap();
        loop {
            let out = env.step(rng.random_range(-1.0..=1.0)).unwrap();
            steps += 1;
            for id in LinkId::ALL {
                let l = env.link(id);
                let scale = l.offered_bits.max(l.queue_capacity_bits).max(1.0);
                worst = worst.max(l.conservation_residual().abs() / scale);
                ranges_ok &= (0.0..=q_cap).contains(&l.queue_bits)
                    && l.delivered_bits <= l.capacity * 2.0 * (1.0 + 1e-12);
            }
            ranges_ok &= outcome_in_range(&out);
            if out.done {
                break;
            }
        }
    }
    (worst, steps, ranges_ok)
}

/// Range invariants of one step: losses and utilizations in `[0, 1]`, both
/// rewards within their bounds, delays at least the base delay.
pub fn outcome_in_range(out: &StepOutcome) -> bool {
    let i = &out.info;
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    out.obs.is_finite()
        && unit(i.loss_m)
        && unit(i.loss_i)
        && unit(i.util_m)
        && unit(i.util_i)
        && unit(i.overall_loss)
        && (-1.0..=1.0).contains(&i.achieved_ratio)
        && i.delay_m >= 0.01
        && i.delay_i >= 0.01
        && out.reward_utility <= 0.0
        && out.reward_utility >= -i.scale - 1e-12
        && out.reward_loss <= 0.0
        && out.reward_loss >= -10.0 * i.scale - 1e-12
}

/// Mean `|achieved - target|` over steps 21..30 of an episode that holds
/// `target` constant.
pub fn steering_error(target: f64, seed: u64) -> f64 {
    let mut env = LoadBalancerEnv::new(SimParams::default()).unwrap();
    env.reset(EpisodeConfig::sample(seed)).unwrap();
    let mut err = 0.0;
    for k in 0..30 {
        let out = env.step(target).unwrap();
        if k >= 20 {
            err += (out.info.achieved_ratio - target).abs();
        }
    }
    err / 10.0
}

/// Full outcome sequence of an episode under a fixed action script.
pub fn scripted_episode(seed: u64, actions: &[f64]) -> Vec<StepOutcome> {
    let mut env = LoadBalancerEnv::new(SimParams::default()).unwrap();
    env.reset(EpisodeConfig::sample(seed)).unwrap();
    actions.iter().map(|&a| env.step(a).unwrap()).collect()
}

/// Worst disagreement between `kanlb::harness::ccdf` and direct counting,
/// over random samples with many ties, queried at every sample value, at
/// midpoints and outside the range. Returns `None` when some table fails
/// its own monotonicity and range validation.
pub fn ccdf_oracle_error(trials: usize, seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..400);
        let levels = rng.random_range(1..50) as f64;
        let samples: Vec<f64> = (0..n).map(|_| (rng.random_range(-1.0..2.0) * levels).round() / levels).collect();
        let table = kanlb::harness::ccdf(&samples).ok()?;
        table.validate().ok()?;
        let mut probes = samples.clone();
        probes.extend(samples.iter().map(|s| s + 0.5 / levels));
        probes.extend([-10.0, 10.0, f64::MIN, f64::MAX]);
        for x in probes {
            worst = worst.max((table.value_at(x) - ccdf_by_counting(&samples, x)).abs());
        }
    }
    Some(worst)
}

// ---- symbolic oracles ----

pub fn random_states(n: usize, seed: u64) -> Vec<[f64; OBS_DIM]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| std::array::from_fn(|_| rng.random_range(0.0..1.3))).collect()
}

pub fn r2(pred: &[f64], target: &[f64]) -> f64 {
    let m = target.iter().sum::<f64>() / target.len() as f64;
    let ss_tot: f64 = target.iter().map(|y| (y - m).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(target).map(|(p, y)| (p - y).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Activations that lie exactly in the cubic spline space (or very close to
/// it), so the layer computes known closed forms.
pub fn planted_layer() -> (KanLayer, Vec<Box<dyn Fn(f64) -> f64>>) {
    let grid = SplineGrid::default();
    let planted: Vec<Box<dyn Fn(f64) -> f64>> = vec![
        Box::new(|x| 0.3 * x - 0.1),
        Box::new(|x| -0.4 * (1.5 * x - 0.5).powi(2) + 0.2),
        Box::new(|x| 0.05 * (x + 0.25).powi(3)),
        Box::new(|x| 0.1 * (0.5 * x).exp() - 0.1),
        Box::new(|x| -0.2 * x),
        Box::new(|x| 0.15 * (x - 0.5).powi(2)),
        Box::new(|x| 0.25 * x + 0.05),
        Box::new(|x| -0.1 * (2.0 * x - 1.0).powi(3)),
        Box::new(|x| 0.12 * x),
        Box::new(|x| -0.3 * (x + 0.5).powi(2) + 0.3),
    ];
    let mut layer = KanLayer::zeros(OBS_DIM, 1, grid);
    for (p, f) in planted.iter().enumerate() {
        *layer.activation_mut(0, p) = KanActivation::fit_to(grid, f, 400);
    }
    (layer, planted)
}

pub fn planted_dataset(n: usize, seed: u64) -> (Vec<[f64; OBS_DIM]>, Vec<f64>) {
    let states = random_states(n, seed);
    let targets = states.iter().map(|s| clip_action(1.0 - s[1] * s[1])).collect();
    (states, targets)
}
