mod common;

use kanlb::neural::{clamp_unit, KanLayer, SplineGrid};
use kanlb::ppo::{BanditEnv, PpoConfig};
use kanlb::simnet::OBS_DIM;
use kanlb::symbolic::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn population_std(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn reference_anchors_at_zero_state() {
    let zero = [0.0; OBS_DIM];
    let eq3 = reference_policy(ReferenceId::Eq3);
    let pre = 1.3 - 1.0 / 3.0 + 3.0 * 0.36 / 32.0;
    assert!((eq3.eval_raw(&zero) - pre).abs() < 1e-9);
    assert!((eq3.eval_raw(&zero) - 1.000_416_666_666_666_7).abs() < 1e-9);
    assert_eq!(eq3.eval(&zero), 1.0);
    let eq4 = reference_policy(ReferenceId::Eq4);
    assert!((eq4.eval_raw(&zero) - 0.8).abs() < 1e-9);
    let eq5 = reference_policy(ReferenceId::Eq5);
    assert!((eq5.eval_raw(&zero) - 2.0).abs() < 1e-9);
    assert_eq!(eq5.eval(&zero), 1.0);
    let eq6 = reference_policy(ReferenceId::Eq6);
    assert!((eq6.eval_raw(&zero) - 1.0).abs() < 1e-9);
}

#[test]
fn eval_examples() {
    let x: [f64; OBS_DIM] = std::array::from_fn(|p| if p == 4 { 0.3 } else { 0.9 });
    assert_eq!(Expr::Const(2.0).eval(&x), 1.0);
    assert_eq!(Expr::input(4).eval(&x), 0.3);
    assert!("eq7".parse::<ReferenceId>().is_err());
}

#[test]
fn rendered_forms_reparse_identically() {
    let mut exprs: Vec<Expr> = ReferenceId::ALL.iter().map(|&r| reference_policy(r)).collect();
    let (layer, _) = common::planted_layer();
    let (kan_expr, _) = extract_kan_symbolic(&layer, &common::random_states(600, 3), 0.0, &AffineGrid::default()).unwrap();
    exprs.push(kan_expr);
    exprs.push(Expr::binary(
        BinOp::Div,
        Expr::unary(Func::Log, Expr::input(2)),
        Expr::binary(BinOp::Sub, Expr::unary(Func::Sqrt, Expr::input(5)), Expr::Const(-0.125)),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let obs: Vec<[f64; OBS_DIM]> = (0..1000)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..2.0)))
        .collect();
    for e in &exprs {
        let from_sexpr = parse_sexpr(&e.to_sexpr()).unwrap();
        let from_infix = parse_infix(&e.to_infix()).unwrap();
        assert_eq!(&from_sexpr, e);
        for o in &obs {
            let want = e.eval_raw(o);
            assert!((from_sexpr.eval_raw(o) - want).abs() <= 1e-12 * want.abs().max(1.0));
            assert!((from_infix.eval_raw(o) - want).abs() <= 1e-12 * want.abs().max(1.0), "{}", e.to_infix());
        }
    }
}

#[test]
fn evaluation_is_bounded_for_finite_observations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let e = Expr::binary(
        BinOp::Div,
        Expr::unary(Func::Exp, Expr::binary(BinOp::Mul, Expr::Const(500.0), Expr::input(0))),
        Expr::unary(Func::Log, Expr::input(1)),
    );
    for _ in 0..2000 {
        let o: [f64; OBS_DIM] = std::array::from_fn(|_| rng.random_range(-1e6..1e6));
        let a = e.eval(&o);
        assert!(a.is_finite() && (-1.0..=1.0).contains(&a));
    }
}

#[test]
fn constant_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let exprs = [
        reference_policy(ReferenceId::Eq3),
        reference_policy(ReferenceId::Eq4),
        reference_policy(ReferenceId::Eq5),
        reference_policy(ReferenceId::Eq6),
        Expr::affine(Func::Tanh, 1.7, -0.3, 0.8, 0.1, Expr::input(2)),
        Expr::affine(Func::Cube, 0.6, 0.2, -1.1, 0.4, Expr::input(7)),
    ];
    for e in &exprs {
        let mean = SymbolicMean { expr: e.clone() };
        for _ in 0..10 {
            let x: Vec<f64> = (0..OBS_DIM).map(|_| rng.random_range(0.0..1.3)).collect();
            let err = common::max_gradient_error(&mean, &x, &[1.0]);
            assert!(err < common::FD_REL_TOL, "{}: {err}", e.to_infix());
        }
    }
}

#[test]
fn planted_kan_layer_is_recovered() {
    let (layer, planted) = common::planted_layer();
    let states = common::random_states(2000, 7);
    let (expr, report) = extract_kan_symbolic(&layer, &states, DEFAULT_IMPORTANCE_THRESHOLD, &AffineGrid::default()).unwrap();
    for t in &report.terms {
        assert!(t.fit.r_squared > 0.999, "input {}: {}", t.input, t.fit.r_squared);
        assert!(t.retained);
    }
    let held_out = common::random_states(10_000, 8);
    let pred: Vec<f64> = held_out.iter().map(|s| expr.eval(s)).collect();
    let target: Vec<f64> = held_out
        .iter()
        .map(|s| clamp_unit(planted.iter().enumerate().map(|(p, f)| f(s[p])).sum()))
        .collect();
    assert!(common::r2(&pred, &target) > 0.999);
    assert!(report.fidelity_r_squared > 0.999);
}

#[test]
fn importance_matches_independent_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layer = KanLayer::new(OBS_DIM, 1, SplineGrid::default(), &mut rng);
    let states = common::random_states(1500, 9);
    let (_, report) = extract_kan_symbolic(&layer, &states, 0.0, &AffineGrid::default()).unwrap();
    let oracle: Vec<f64> = (0..OBS_DIM)
        .map(|p| {
            let ys: Vec<f64> = states.iter().map(|s| layer.activation(0, p).forward(s[p])).collect();
            population_std(&ys)
        })
        .collect();
    for (t, want) in report.terms.iter().zip(&oracle) {
        assert!((t.fit.importance - want).abs() <= 1e-12 * want.max(1.0));
    }
    let order = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        idx
    };
    let got: Vec<f64> = report.terms.iter().map(|t| t.fit.importance).collect();
    assert_eq!(order(&got), order(&oracle));
    assert_eq!(report.terms.iter().filter(|t| t.retained).count(), OBS_DIM);
}

#[test]
fn activation_samples_recompose_the_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let layer = KanLayer::new(OBS_DIM, 1, SplineGrid::default(), &mut rng);
    let states = common::random_states(50, 10);
    let samples = sample_activations(&layer, &states).unwrap();
    assert!(samples.iter().all(|s| s.xs.len() == 50 && s.ys.len() == 50));
    for (i, s) in states.iter().enumerate() {
        let total: f64 = samples.iter().map(|a| a.ys[i]).sum();
        assert!((total - layer.forward(s)[0]).abs() < 1e-12);
    }
    assert_eq!(sample_activations(&layer, &states[..1]).unwrap()[0].xs.len(), 1);
    assert!(sample_activations(&layer, &[]).is_err());
}

#[test]
fn pruning_everything_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layer = KanLayer::new(OBS_DIM, 1, SplineGrid::default(), &mut rng);
    let err = extract_kan_symbolic(&layer, &common::random_states(500, 2), 1.5, &AffineGrid::default()).unwrap_err();
    assert!(err.to_string().contains("lower the threshold"));
}

#[test]
fn distillation_recovers_planted_expression() {
    let (states, targets) = common::planted_dataset(2000, 31);
    let (expr, report) = distill_ppo_ds(&states, &targets, &DistillConfig::default()).unwrap();
    let (held, held_targets) = common::planted_dataset(2000, 32);
    let mse = expression_mse(&expr, &held, &held_targets);
    assert!(mse < 1e-3, "{} mse {mse}", report.expression);
    assert!(report.holdout_mse < 1e-3);
    assert!(!report.poor_fit);
}

#[test]
fn constant_dataset_gives_constant_expression() {
    let states = common::random_states(600, 12);
    let targets = vec![0.35; 600];
    let config = DistillConfig {
        population: 100,
        generations: 10,
        ..DistillConfig::default()
    };
    let (expr, _) = distill_ppo_ds(&states, &targets, &config).unwrap();
    assert!(!expr.has_inputs(), "{}", expr.to_infix());
    assert!((expr.eval(&states[0]) - 0.35).abs() < 1e-9);
}

#[test]
fn larger_penalty_never_grows_the_expression() {
    let states = common::random_states(1000, 40);
    let targets: Vec<f64> = states
        .iter()
        .map(|s| clip_action(0.8 - 0.5 * s[0] * s[3] + 0.2 * (2.0 * s[6]).tanh()))
        .collect();
    for seed in 1..=3 {
        let mut last = usize::MAX;
        for penalty in [1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3, 3.2e-3, 6.4e-3] {
            let config = DistillConfig {
                population: 150,
                generations: 15,
                penalty,
                seed,
                ..DistillConfig::default()
            };
            let (expr, _) = distill_ppo_ds(&states, &targets, &config).unwrap();
            assert!(expr.size() <= last, "seed {seed} penalty {penalty}: {} > {last}", expr.size());
            last = expr.size();
        }
    }
}

#[test]
fn small_datasets_are_rejected() {
    let (states, targets) = common::planted_dataset(499, 1);
    assert!(distill_ppo_ds(&states, &targets, &DistillConfig::default()).is_err());
}

fn bandit_score(e: &Expr) -> kanlb::Result<f64> {
    Ok(-(e.eval(&[0.0; OBS_DIM]) - 0.3).powi(2))
}

#[test]
fn zero_step_finetune_is_identity() {
    let e = reference_policy(ReferenceId::Eq4);
    let config = PpoConfig {
        total_steps: 0,
        ..PpoConfig::default()
    };
    let (out, result) = finetune_coeffs(&e, &mut BanditEnv { optimum: 0.3 }, &config, bandit_score).unwrap();
    assert_eq!(out, e);
    assert_eq!(result.steps, 0);
}

#[test]
fn finetune_drives_a_constant_to_the_bandit_optimum() {
    let e = Expr::Const(-0.2);
    let config = PpoConfig {
        total_steps: 200 * 50,
        ..PpoConfig::default()
    };
    let (out, result) = finetune_coeffs(&e, &mut BanditEnv { optimum: 0.3 }, &config, bandit_score).unwrap();
    let c = out.eval(&[0.0; OBS_DIM]);
    assert!((c - 0.3).abs() <= 0.05, "tuned constant {c}");
    assert!(result.reward_after >= result.reward_before);
}
