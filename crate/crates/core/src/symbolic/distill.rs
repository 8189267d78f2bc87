//! Expression search that distills a policy's state-to-action map.
//!
//! A generational genetic program explores trees over the operator set
//! under a fixed parsimony pressure. Trees are scored after an optimal
//! linear rescaling `c0 + c1 * tree`, and the search records, for every tree size, the
//! most accurate tree seen (a Pareto front of size against error). After
//! the search each front member gets its constants tuned by gradient
//! descent, and the reported expression minimizes
//! `MSE + penalty * size` over the front.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expr::{clip_action, BinOp, Expr, Func};
use super::fit::r_squared;
use crate::neural::Adam;
use crate::simnet::OBS_DIM;
use crate::{Error, Result};

pub const MIN_DATASET: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    /// States collected from the parent policy.
    pub dataset_size: usize,
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub max_depth: usize,
    /// Weight per node in the final selection.
    pub penalty: f64,
    /// Weight per node in the fitness that drives the search.
    pub search_parsimony: f64,
    pub seed: u64,
    /// Every k-th sample is held out from fitting.
    pub holdout_every: usize,
    /// Fitness is computed on at most this many training samples.
    pub fitness_samples: usize,
    pub tune_iterations: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            dataset_size: 5000,
            population: 500,
            generations: 60,
            tournament: 5,
            max_depth: 6,
            penalty: 1e-3,
            search_parsimony: 1e-3,
            seed: 1,
            holdout_every: 5,
            fitness_samples: 1024,
            tune_iterations: 150,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dataset_size == 0 || self.population == 0 || self.generations == 0 || self.tournament == 0 {
            return Err(Error::Config("distillation sizes must be positive".into()));
        }
        if self.max_depth < 2 {
            return Err(Error::Config("max_depth must be at least 2".into()));
        }
        if !(self.penalty.is_finite() && self.penalty >= 0.0 && self.search_parsimony.is_finite() && self.search_parsimony >= 0.0) {
            return Err(Error::Config("penalties must be finite and non-negative".into()));
        }
        if self.holdout_every < 2 {
            return Err(Error::Config("holdout_every must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub size: usize,
    pub train_mse: f64,
    pub expression: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    pub expression: String,
    pub sexpr: String,
    pub size: usize,
    pub train_mse: f64,
    pub holdout_mse: f64,
    pub holdout_r_squared: f64,
    pub penalty: f64,
    /// Set when the held-out R² is below 0.9.
    pub poor_fit: bool,
    pub front: Vec<FrontEntry>,
}

struct Data<'a> {
    xs: Vec<&'a [f64; OBS_DIM]>,
    ys: Vec<f64>,
}

impl Data<'_> {
    fn mse(&self, e: &Expr) -> f64 {
        let s: f64 = self.xs.iter().zip(&self.ys).map(|(x, y)| (e.eval(&x[..]) - y).powi(2)).sum();
        s / self.ys.len() as f64
    }

    /// `icept + slope * e` with least-squares coefficients on the raw tree
    /// output, and its MSE after the clip.
    fn scaled(&self, e: &Expr) -> Option<(f64, Expr)> {
        let g: Vec<f64> = self.xs.iter().map(|x| e.eval_raw(&x[..])).collect();
        if g.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let n = g.len() as f64;
        let mg = g.iter().sum::<f64>() / n;
        let my = self.ys.iter().sum::<f64>() / n;
        let sgg: f64 = g.iter().map(|v| (v - mg).powi(2)).sum();
        if sgg <= 1e-12 * n {
            return None;
        }
        let slope = g.iter().zip(&self.ys).map(|(a, b)| (a - mg) * (b - my)).sum::<f64>() / sgg;
        let icept = my - slope * mg;
        let m = g
            .iter()
            .zip(&self.ys)
            .map(|(v, y)| (clip_action(icept + slope * v) - y).powi(2))
            .sum::<f64>()
            / n;
        let scaled = Expr::binary(BinOp::Add, Expr::Const(icept), Expr::binary(BinOp::Mul, Expr::Const(slope), e.clone()));
        m.is_finite().then_some((m, scaled))
    }
}

/// Distills `(state, action)` pairs into an expression. `targets` should be
/// the parent's deterministic (clamped mean) actions.
pub fn distill_ppo_ds(states: &[[f64; OBS_DIM]], targets: &[f64], config: &DistillConfig) -> Result<(Expr, DistillReport)> {
    config.validate()?;
    if states.len() != targets.len() {
        return Err(Error::Config("states and targets differ in length".into()));
    }
    if states.len() < MIN_DATASET {
        return Err(Error::Config(format!(
            "distillation needs at least {MIN_DATASET} samples, got {}",
            states.len()
        )));
    }
    if targets.iter().any(|t| !t.is_finite()) || states.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("dataset contains non-finite values".into()));
    }
    let (mut train, mut hold) = (Data { xs: vec![], ys: vec![] }, Data { xs: vec![], ys: vec![] });
    for (i, (s, &y)) in states.iter().zip(targets).enumerate() {
        let d = if i % config.holdout_every == config.holdout_every - 1 { &mut hold } else { &mut train };
        d.xs.push(s);
        d.ys.push(y);
    }
    let stride = train.ys.len().div_ceil(config.fitness_samples.max(1)).max(1);
    let fit_set = Data {
        xs: train.xs.iter().step_by(stride).copied().collect(),
        ys: train.ys.iter().step_by(stride).copied().collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut front: BTreeMap<usize, (f64, Expr)> = BTreeMap::new();
    let mean_target = train.ys.iter().sum::<f64>() / train.ys.len() as f64;
    offer(&mut front, Expr::Const(mean_target), fit_set.mse(&Expr::Const(mean_target)));

    let mut pop: Vec<Expr> = (0..config.population)
        .map(|i| {
            let depth = 2 + i % (config.max_depth.min(5) - 1);
            random_tree(&mut rng, depth, i % 2 == 0)
        })
        .collect();
    for _ in 0..config.generations {
        let scored: Vec<(f64, Option<(f64, Expr)>)> = pop.par_iter().map(|e| (fit_set.mse(e), fit_set.scaled(e))).collect();
        let fitness: Vec<f64> = scored
            .iter()
            .zip(&pop)
            .map(|((m, sc), e)| {
                let m = sc.as_ref().map_or(*m, |(ms, _)| ms.min(*m));
                if m.is_finite() { m + config.search_parsimony * e.size() as f64 } else { f64::INFINITY }
            })
            .collect();
        for (e, (m, sc)) in pop.iter().zip(scored) {
            offer_scored(&mut front, e, m, sc, config.max_depth);
        }
        let elite = argmin(&fitness);
        let mut next = Vec::with_capacity(pop.len());
        next.push(pop[elite].clone());
        while next.len() < pop.len() {
            let parent = &pop[tournament(&mut rng, &fitness, config.tournament)];
            let roll: f64 = rng.random();
            let child = if roll < 0.7 {
                let other = &pop[tournament(&mut rng, &fitness, config.tournament)];
                crossover(&mut rng, parent, other)
            } else if roll < 0.85 {
                subtree_mutation(&mut rng, parent)
            } else if roll < 0.95 {
                point_mutation(&mut rng, parent)
            } else {
                parent.clone()
            };
            next.push(if child.depth() <= config.max_depth { child } else { parent.clone() });
        }
        pop = next;
    }
    let scored: Vec<(f64, Option<(f64, Expr)>)> = pop.par_iter().map(|e| (fit_set.mse(e), fit_set.scaled(e))).collect();
    for (e, (m, sc)) in pop.iter().zip(scored) {
        offer_scored(&mut front, e, m, sc, config.max_depth);
    }

    // tune the constants of every front member on the full training split
    let tuned: Vec<(usize, f64, Expr)> = front
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(_, e)| {
            let e = tune_constants(&e, &train, config.tune_iterations);
            (e.size(), train.mse(&e), e)
        })
        .collect();
    let mut best_per_size: BTreeMap<usize, (f64, Expr)> = BTreeMap::new();
    for (size, m, e) in tuned {
        if m.is_finite() && best_per_size.get(&size).is_none_or(|(b, _)| m < *b) {
            best_per_size.insert(size, (m, e));
        }
    }
    let (size, (train_mse, expr)) = best_per_size
        .iter()
        .min_by(|(sa, (ma, _)), (sb, (mb, _))| {
            let fa = ma + config.penalty * **sa as f64;
            let fb = mb + config.penalty * **sb as f64;
            fa.total_cmp(&fb).then(sa.cmp(sb))
        })
        .map(|(s, v)| (*s, v.clone()))
        .ok_or_else(|| Error::Extraction("search produced no finite expression".into()))?;
    let pred: Vec<f64> = hold.xs.iter().map(|x| expr.eval(&x[..])).collect();
    let holdout_r_squared = r_squared(&pred, &hold.ys);
    let report = DistillReport {
        expression: expr.to_infix(),
        sexpr: expr.to_sexpr(),
        size,
        train_mse,
        holdout_mse: hold.mse(&expr),
        holdout_r_squared,
        penalty: config.penalty,
        poor_fit: holdout_r_squared < 0.9,
        front: best_per_size
            .iter()
            .map(|(s, (m, e))| FrontEntry {
                size: *s,
                train_mse: *m,
                expression: e.to_infix(),
            })
            .collect(),
    };
    Ok((expr, report))
}

fn offer_scored(front: &mut BTreeMap<usize, (f64, Expr)>, e: &Expr, mse: f64, scaled: Option<(f64, Expr)>, max_depth: usize) {
    if mse.is_finite() {
        offer(front, e.fold_constants(), mse);
    }
    if let Some((m, s)) = scaled {
        if s.depth() <= max_depth {
            offer(front, s.fold_constants(), m);
        }
    }
}

fn offer(front: &mut BTreeMap<usize, (f64, Expr)>, e: Expr, mse: f64) {
    let size = e.size();
    if front.get(&size).is_none_or(|(m, _)| mse < *m) {
        front.insert(size, (mse, e));
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x < &v[best] {
            best = i;
        }
    }
    best
}

fn tournament<R: Rng>(rng: &mut R, fitness: &[f64], k: usize) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..k {
        let i = rng.random_range(0..fitness.len());
        if fitness[i] < fitness[best] {
            best = i;
        }
    }
    best
}

const UNARY: [Func; 6] = [Func::Exp, Func::Log, Func::Sqrt, Func::Tanh, Func::Square, Func::Cube];

fn random_terminal<R: Rng>(rng: &mut R) -> Expr {
    if rng.random_bool(0.6) {
        Expr::Input(rng.random_range(0..OBS_DIM))
    } else {
        Expr::Const((rng.random_range(-2.0..2.0_f64) * 10.0).round() / 10.0)
    }
}

/// Grow (mixed arities, may stop early) or full (operators down to `depth`).
fn random_tree<R: Rng>(rng: &mut R, depth: usize, full: bool) -> Expr {
    if depth <= 1 || (!full && rng.random_bool(0.3)) {
        return random_terminal(rng);
    }
    if rng.random_bool(0.6) {
        let op = *BinOp::ALL.choose(rng).unwrap();
        Expr::binary(op, random_tree(rng, depth - 1, full), random_tree(rng, depth - 1, full))
    } else {
        let f = *UNARY.choose(rng).unwrap();
        Expr::unary(f, random_tree(rng, depth - 1, full))
    }
}

fn node_count(e: &Expr) -> usize {
    match e {
        Expr::Const(_) | Expr::Input(_) => 1,
        Expr::Unary(_, a) | Expr::Affine { arg: a, .. } => 1 + node_count(a),
        Expr::Binary(_, l, r) => 1 + node_count(l) + node_count(r),
    }
}

fn subtree(e: &Expr, idx: usize) -> &Expr {
    if idx == 0 {
        return e;
    }
    match e {
        Expr::Unary(_, a) | Expr::Affine { arg: a, .. } => subtree(a, idx - 1),
        Expr::Binary(_, l, r) => {
            let nl = node_count(l);
            if idx <= nl {
                subtree(l, idx - 1)
            } else {
                subtree(r, idx - 1 - nl)
            }
        }
        _ => unreachable!("index beyond tree"),
    }
}

fn replace(e: &Expr, idx: usize, new: &Expr) -> Expr {
    if idx == 0 {
        return new.clone();
    }
    match e {
        Expr::Unary(f, a) => Expr::unary(*f, replace(a, idx - 1, new)),
        Expr::Affine { func, a, b, c, d, arg } => Expr::affine(*func, *a, *b, *c, *d, replace(arg, idx - 1, new)),
        Expr::Binary(op, l, r) => {
            let nl = node_count(l);
            if idx <= nl {
                Expr::binary(*op, replace(l, idx - 1, new), (**r).clone())
            } else {
                Expr::binary(*op, (**l).clone(), replace(r, idx - 1 - nl, new))
            }
        }
        _ => unreachable!("index beyond tree"),
    }
}

fn crossover<R: Rng>(rng: &mut R, a: &Expr, b: &Expr) -> Expr {
    let i = rng.random_range(0..node_count(a));
    let j = rng.random_range(0..node_count(b));
    replace(a, i, subtree(b, j))
}

fn subtree_mutation<R: Rng>(rng: &mut R, a: &Expr) -> Expr {
    let i = rng.random_range(0..node_count(a));
    let depth = rng.random_range(1..=3);
    replace(a, i, &random_tree(rng, depth, false))
}

/// Perturbs one constant, or swaps one operator for another of the same arity.
fn point_mutation<R: Rng>(rng: &mut R, a: &Expr) -> Expr {
    let i = rng.random_range(0..node_count(a));
    let node = subtree(a, i);
    let new = match node {
        Expr::Const(c) => Expr::Const(c + rng.random_range(-0.5..0.5) * (c.abs() + 0.1)),
        Expr::Input(_) => Expr::Input(rng.random_range(0..OBS_DIM)),
        Expr::Unary(_, e) => Expr::Unary(*UNARY.choose(rng).unwrap(), e.clone()),
        Expr::Binary(_, l, r) => Expr::Binary(*BinOp::ALL.choose(rng).unwrap(), l.clone(), r.clone()),
        Expr::Affine { .. } => node.clone(),
    };
    replace(a, i, &new)
}

/// Gradient descent on the constants; keeps the best constants seen.
fn tune_constants(e: &Expr, data: &Data<'_>, iterations: usize) -> Expr {
    let n_const = e.num_constants();
    let mut best = e.clone();
    let mut best_mse = data.mse(e);
    if n_const == 0 || iterations == 0 {
        return best;
    }
    let mut cur = e.clone();
    let mut params = cur.constants();
    let mut opt = Adam::new(n_const);
    let n = data.ys.len() as f64;
    let mut ig = [0.0; OBS_DIM];
    for _ in 0..iterations {
        let mut grad = vec![0.0; n_const];
        for (x, y) in data.xs.iter().zip(&data.ys) {
            let raw = cur.eval_raw(&x[..]);
            if !(raw > -1.0 && raw < 1.0) {
                continue;
            }
            cur.backward_raw(&x[..], 2.0 * (raw - y) / n, &mut grad, &mut ig);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        opt.step(&mut params, &grad, 0.02);
        if params.iter().any(|p| !p.is_finite()) {
            break;
        }
        cur.set_constants(&params);
        let m = data.mse(&cur);
        if m < best_mse {
            best_mse = m;
            best = cur.clone();
        }
    }
    best
}

/// Mean squared error of `e` against `targets` after the final clip.
pub fn expression_mse(e: &Expr, states: &[[f64; OBS_DIM]], targets: &[f64]) -> f64 {
    let s: f64 = states.iter().zip(targets).map(|(x, y)| (clip_action(e.eval_raw(x)) - y).powi(2)).sum();
    s / targets.len().max(1) as f64
}
