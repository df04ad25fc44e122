//! Pairwise logistic ranking loss and full-batch gradient descent.
//!
//! For a (student, enrolled course, sampled course) triple the loss is
//! `softplus(-(e_s·e_pos − e_s·e_neg))`, averaged over all triples.

use std::collections::HashSet;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::GcnModel;
use super::view::GraphView;
use super::{GnnError, Result};
use crate::graph::NodeKind;

/// Update rule applied to the full-batch gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent.
    Sgd,
    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    #[default]
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" | "gd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!("unknown optimizer `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub negatives: usize,
    pub seed: u64,
    pub hidden: usize,
    pub embed: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.05,
            optimizer: Optimizer::Adam,
            negatives: 1,
            seed: 0,
            hidden: 32,
            embed: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(GnnError::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(GnnError::InvalidConfig("learning rate must be finite and non-negative".into()));
        }
        if self.negatives == 0 {
            return Err(GnnError::InvalidConfig("negatives must be >= 1".into()));
        }
        if self.hidden == 0 || self.embed == 0 {
            return Err(GnnError::InvalidConfig("layer widths must be >= 1".into()));
        }
        Ok(())
    }
}

/// A (student, positive course, negative course) triple of view positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub student: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn margins(e: &Array2<f64>, triples: &[Triple]) -> Vec<f64> {
    triples
        .iter()
        .map(|t| {
            let s = e.row(t.student);
            s.dot(&e.row(t.positive)) - s.dot(&e.row(t.negative))
        })
        .collect()
}

fn triple_loss(e: &Array2<f64>, triples: &[Triple]) -> f64 {
    let total: f64 = margins(e, triples).into_iter().map(|m| softplus(-m)).sum();
    total / triples.len() as f64
}

/// `loss(up) - loss(down)` summed per triple without forming either loss.
fn loss_difference(up: &[f64], down: &[f64]) -> f64 {
    // softplus(a) - softplus(b) = ln1p(sigmoid(b) * expm1(a - b))
    let total: f64 = up
        .iter()
        .zip(down)
        .map(|(&mu, &md)| (sigmoid(-md) * (md - mu).exp_m1()).ln_1p())
        .sum();
    total / up.len() as f64
}

/// Mean loss over `triples`.
pub fn loss(model: &GcnModel, view: &GraphView, triples: &[Triple]) -> f64 {
    triple_loss(&model.activations(view, None).embeddings, triples)
}

fn loss_and_grad_with(model: &GcnModel, view: &GraphView, ax: &Array2<f64>, triples: &[Triple]) -> (f64, Gradients) {
    let act = model.activations(view, Some(ax));
    let e = &act.embeddings;
    let m = triples.len() as f64;

    let mut de = Array2::<f64>::zeros(e.raw_dim());
    let mut total = 0.0;
    for t in triples {
        let (s, p, n) = (e.row(t.student), e.row(t.positive), e.row(t.negative));
        let margin = s.dot(&p) - s.dot(&n);
        total += softplus(-margin);
        // d softplus(-x)/dx = -sigmoid(-x)
        let g = -sigmoid(-margin) / m;
        let diff = &p - &n;
        let s_owned = s.to_owned();
        de.row_mut(t.student).scaled_add(g, &diff);
        de.row_mut(t.positive).scaled_add(g, &s_owned);
        de.row_mut(t.negative).scaled_add(-g, &s_owned);
    }

    // E = Â Z2 with Â symmetric
    let dz2 = view.adjacency.matmul(&de);
    let dw2 = act.hidden.t().dot(&dz2);
    let mut dpre = dz2.dot(&model.w2.t());
    dpre.zip_mut_with(&act.pre, |d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    let dw1 = act.ax.t().dot(&dpre);
    (total / m, Gradients { w1: dw1, w2: dw2 })
}

/// Mean loss and its analytic gradient with respect to both weight matrices.
pub fn loss_and_grad(model: &GcnModel, view: &GraphView, triples: &[Triple]) -> (f64, Gradients) {
    let ax = view.adjacency.matmul(&view.features);
    loss_and_grad_with(model, view, &ax, triples)
}

/// Observed (student, course) positions in the view.
pub fn learn_pairs(view: &GraphView) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for s in view.nodes_of_kind(NodeKind::Student) {
        for (c, _) in view.adjacency.row(s) {
            if view.kinds[c] == NodeKind::Course {
                pairs.push((s, c));
            }
        }
    }
    pairs
}

/// Pairs each positive with `negatives` uniformly drawn non-enrolled courses.
/// Students enrolled in every course contribute no triples.
pub fn sample_triples(
    positives: &[(usize, usize)],
    courses: &[usize],
    negatives: usize,
    rng: &mut impl Rng,
) -> Vec<Triple> {
    let observed: HashSet<(usize, usize)> = positives.iter().copied().collect();
    let mut enrolled_count = std::collections::HashMap::<usize, usize>::new();
    for &(s, _) in positives {
        *enrolled_count.entry(s).or_insert(0) += 1;
    }
    let mut out = Vec::with_capacity(positives.len() * negatives);
    for &(s, p) in positives {
        if enrolled_count[&s] >= courses.len() {
            continue;
        }
        for _ in 0..negatives {
            let mut n = courses[rng.random_range(0..courses.len())];
            while observed.contains(&(s, n)) {
                n = courses[rng.random_range(0..courses.len())];
            }
            out.push(Triple {
                student: s,
                positive: p,
                negative: n,
            });
        }
    }
    out
}

struct Adam {
    m: [Array2<f64>; 2],
    v: [Array2<f64>; 2],
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &GcnModel) -> Self {
        let z1 = Array2::zeros(model.w1.raw_dim());
        let z2 = Array2::zeros(model.w2.raw_dim());
        Adam {
            m: [z1.clone(), z2.clone()],
            v: [z1, z2],
            t: 0,
        }
    }

    fn step(&mut self, lr: f64, weights: [&mut Array2<f64>; 2], grads: [&Array2<f64>; 2]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (k, (w, g)) in weights.into_iter().zip(grads).enumerate() {
            self.m[k].zip_mut_with(g, |m, &g| *m = Self::B1 * *m + (1.0 - Self::B1) * g);
            self.v[k].zip_mut_with(g, |v, &g| *v = Self::B2 * *v + (1.0 - Self::B2) * g * g);
            ndarray::Zip::from(w).and(&self.m[k]).and(&self.v[k]).for_each(|w, &m, &v| {
                *w -= lr * (m / c1) / ((v / c2).sqrt() + Self::EPS);
            });
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GcnModel,
    /// Mean loss at each epoch, evaluated before that epoch's update.
    pub losses: Vec<f64>,
}

/// Trains on the view's Learn edges. Negatives are redrawn every epoch from
/// the seeded generator, so the run is a pure function of its inputs.
pub fn train(view: &GraphView, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let positives = learn_pairs(view);
    if positives.is_empty() {
        return Err(GnnError::NoPositives);
    }
    let courses: Vec<usize> = view.nodes_of_kind(NodeKind::Course).collect();
    if positives.len() >= courses.len() * view.nodes_of_kind(NodeKind::Student).count()
        && courses.len() <= 1
    {
        return Err(GnnError::NoPositives);
    }

    let mut model = GcnModel::init(view.feature_config, config.hidden, config.embed, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let ax = view.adjacency.matmul(&view.features);
    let mut losses = Vec::with_capacity(config.epochs);
    let mut adam = (config.optimizer == Optimizer::Adam).then(|| Adam::new(&model));
    for _ in 0..config.epochs {
        let triples = sample_triples(&positives, &courses, config.negatives, &mut rng);
        if triples.is_empty() {
            return Err(GnnError::NoPositives);
        }
        let (l, g) = loss_and_grad_with(&model, view, &ax, &triples);
        losses.push(l);
        match &mut adam {
            Some(opt) => opt.step(config.learning_rate, [&mut model.w1, &mut model.w2], [&g.w1, &g.w2]),
            None => {
                model.w1.scaled_add(-config.learning_rate, &g.w1);
                model.w2.scaled_add(-config.learning_rate, &g.w2);
            }
        }
    }
    if !model.is_finite() {
        return Err(GnnError::Diverged);
    }
    Ok(TrainOutcome { model, losses })
}

fn weight(m: &mut GcnModel, layer: usize, i: usize, j: usize) -> &mut f64 {
    if layer == 0 {
        &mut m.w1[[i, j]]
    } else {
        &mut m.w2[[i, j]]
    }
}

/// Largest relative disagreement between analytic gradients and central
/// finite differences over every weight:
/// `|ga − gn| / max(|ga|, |gn|, 1e-8)`.
pub fn grad_check(view: &GraphView, model: &GcnModel, triples: &[Triple], epsilon: f64) -> f64 {
    let ax = view.adjacency.matmul(&view.features);
    let (_, analytic) = loss_and_grad_with(model, view, &ax, triples);
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for layer in 0..2 {
        let shape = if layer == 0 { model.w1.dim() } else { model.w2.dim() };
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let orig = *weight(&mut probe, layer, i, j);
                *weight(&mut probe, layer, i, j) = orig + epsilon;
                let up = margins(&probe.activations(view, Some(&ax)).embeddings, triples);
                *weight(&mut probe, layer, i, j) = orig - epsilon;
                let down = margins(&probe.activations(view, Some(&ax)).embeddings, triples);
                *weight(&mut probe, layer, i, j) = orig;
                let numeric = loss_difference(&up, &down) / (2.0 * epsilon);
                let ga = if layer == 0 { analytic.w1[[i, j]] } else { analytic.w2[[i, j]] };
                let rel = (ga - numeric).abs() / ga.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    worst
}

/// Row norms, used to pick group seeds.
pub fn row_norms(e: &Array2<f64>) -> Vec<f64> {
    e.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).collect()
}
