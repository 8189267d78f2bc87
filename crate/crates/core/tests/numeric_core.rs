mod common;

use common::*;
use kanlb::neural::{bspline_basis, Differentiable, GaussianPolicy, Mlp, SplineGrid};
use kanlb::ppo::{compute_gae, normalize_advantages};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_finite_differences() {
    let worst = gradient_sweep(100, 11);
    assert!(worst < FD_REL_TOL, "worst relative error {worst}");
}

#[test]
fn basis_matches_recursive_oracle() {
    let grid = SplineGrid::default();
    let t = grid.knots();
    for i in 0..=600 {
        let x = -2.5 + 5.5 * i as f64 / 600.0;
        let b = bspline_basis(x, &t, grid.order());
        for (j, v) in b.iter().enumerate() {
            assert!((v - cox_de_boor(j, grid.order(), x, &t)).abs() < 1e-12, "x={x} j={j}");
        }
    }
}

#[test]
fn basis_sums_to_one_on_the_grid() {
    let grid = SplineGrid::default();
    let t = grid.knots();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let x = rng.random_range(grid.lo..grid.hi);
        let s: f64 = bspline_basis(x, &t, grid.order()).iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}

#[test]
fn clamp_gradient_vanishes_outside() {
    // A one-input linear MLP whose raw output is 1.5 at x = 1.
    let mut net = Mlp::zeros(&[1, 1]);
    net.weights[0][0] = 1.5;
    let policy = GaussianPolicy::new(net, 0.0);
    let (out, cache) = policy.forward_cached(&[1.0]);
    assert_eq!(out[0], 1.0);
    let mut g = vec![0.0; policy.num_params()];
    policy.backward(&cache, &[1.0, 0.0], &mut g);
    assert_eq!(&g[..2], &[0.0, 0.0]);
}

#[test]
fn critic_matches_hand_rolled_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = Mlp::orthogonal(&[10, 64, 64, 1], 1.0, &mut rng);
    let mut net = net;
    for b in net.biases.iter_mut().flatten() {
        *b = rng.random_range(-0.3..0.3);
    }
    for _ in 0..20 {
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..2.0)).collect();
        let layer = |w: &[f64], b: &[f64], inp: &[f64], tanh: bool| -> Vec<f64> {
            (0..b.len())
                .map(|o| {
                    let mut z = b[o];
                    for i in 0..inp.len() {
                        z += w[o * inp.len() + i] * inp[i];
                    }
                    if tanh {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect()
        };
        let h1 = layer(&net.weights[0], &net.biases[0], &x, true);
        let h2 = layer(&net.weights[1], &net.biases[1], &h1, true);
        let y = layer(&net.weights[2], &net.biases[2], &h2, false);
        assert!((net.forward(&x)[0] - y[0]).abs() < 1e-12);
    }
}

#[test]
fn gae_matches_brute_force_sum() {
    let r = [1.0, 0.0, 1.0, 0.0, 1.0];
    let v = [0.5; 5];
    let (adv, ret) = compute_gae(&r, &v, &[false; 5], 0.5, 0.9, 0.8);
    let oracle = brute_force_gae(&r, &v, 0.5, 0.9, 0.8);
    for t in 0..5 {
        assert!((adv[t] - oracle[t]).abs() < 1e-12);
        assert!((ret[t] - (oracle[t] + 0.5)).abs() < 1e-12);
    }
}

#[test]
fn gae_random_cases_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.random_range(1..60);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let boot = rng.random_range(-1.0..1.0);
        let (g, l) = (rng.random_range(0.5..1.0), rng.random_range(0.0..1.0));
        let (adv, _) = compute_gae(&r, &v, &vec![false; n], boot, g, l);
        let oracle = brute_force_gae(&r, &v, boot, g, l);
        for t in 0..n {
            assert!((adv[t] - oracle[t]).abs() < 1e-12);
        }
    }
}

#[test]
fn gae_one_step_and_monte_carlo_identities() {
    let r = [0.3, -0.2, 0.7, 0.1];
    let v = [0.1, 0.4, -0.3, 0.2];
    let dones = [false, false, false, true];
    let (adv, _) = compute_gae(&r, &v, &dones, 9.0, 0.9, 0.0);
    for t in 0..4 {
        let next = if t + 1 < 4 { v[t + 1] } else { 9.0 };
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        assert_eq!(adv[t], r[t] + 0.9 * next * nonterminal - v[t]);
    }
    let (adv, _) = compute_gae(&r, &v, &dones, 9.0, 1.0, 1.0);
    for t in 0..4 {
        let tail: f64 = r[t..].iter().sum();
        assert!((adv[t] - (tail - v[t])).abs() < 1e-12);
    }
}

#[test]
fn normalized_advantages_are_standardized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..7.0)).collect();
    let z = normalize_advantages(&a);
    let m = z.iter().sum::<f64>() / 50.0;
    let sd = (z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 50.0).sqrt();
    assert!(m.abs() < 1e-9);
    assert!((sd - 1.0).abs() < 1e-6);
}
