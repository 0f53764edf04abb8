//! Binary linear SVM fit by Pegasos-style stochastic subgradient descent on
//! the L2-regularized hinge loss.
//!
//! The bias is the weight of a constant input 1 and is regularized together
//! with the other weights.

use rand::seq::SliceRandom;
use rand::Rng;

use super::FeatureVector;

/// One labeled training example, `label` in {-1, +1}.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a FeatureVector,
    pub label: f64,
}

/// `w` stored as `scale * v` so the shrink step is O(1).
#[derive(Debug, Clone)]
pub struct ScaledWeights {
    v: Vec<f64>,
    v_bias: f64,
    scale: f64,
    norm_sq: f64,
}

impl ScaledWeights {
    pub fn zeros(dim: usize) -> Self {
        ScaledWeights {
            v: vec![0.0; dim],
            v_bias: 0.0,
            scale: 1.0,
            norm_sq: 0.0,
        }
    }

    pub fn margin(&self, x: &FeatureVector) -> f64 {
        self.scale * (x.dot(&self.v) + self.v_bias)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|x| *x = 0.0);
            self.v_bias = 0.0;
            self.scale = 1.0;
            self.norm_sq = 0.0;
            return;
        }
        self.scale *= factor;
        self.norm_sq *= factor * factor;
        if self.scale < 1e-9 {
            self.renormalize();
        }
    }

    fn renormalize(&mut self) {
        let s = self.scale;
        self.v.iter_mut().for_each(|x| *x *= s);
        self.v_bias *= s;
        self.scale = 1.0;
    }

    /// `w += a * (x, 1)`
    fn add(&mut self, a: f64, x: &FeatureVector) {
        let w_dot = self.margin(x);
        let x_norm_sq = x.norm_sq() + 1.0;
        self.norm_sq += 2.0 * a * w_dot + a * a * x_norm_sq;
        let step = a / self.scale;
        for &(i, val) in x.entries() {
            self.v[i as usize] += step * val;
        }
        self.v_bias += step;
    }

    pub fn into_dense(mut self) -> (Vec<f64>, f64) {
        self.renormalize();
        (self.v, self.v_bias)
    }

    pub fn dense(&self) -> (Vec<f64>, f64) {
        self.clone().into_dense()
    }
}

/// One Pegasos update on `example` at step `t` (1-based):
/// `w <- (1 - 1/t) w + [y w.x < 1] (y / (lambda t)) x`, then projection onto
/// the ball of radius `1/sqrt(lambda)`.
pub fn pegasos_step(w: &mut ScaledWeights, example: Example<'_>, lambda: f64, t: u64) {
    let eta = 1.0 / (lambda * t as f64);
    let violated = example.label * w.margin(example.features) < 1.0;
    w.shrink(1.0 - eta * lambda);
    if violated {
        w.add(eta * example.label, example.features);
    }
    let radius_sq = 1.0 / lambda;
    if w.norm_sq > radius_sq {
        w.shrink((radius_sq / w.norm_sq).sqrt());
    }
}

/// `lambda/2 (|w|^2 + b^2) + mean_i max(0, 1 - y_i (w.x_i + b))`
pub fn objective(weights: &[f64], bias: f64, examples: &[Example<'_>], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (weights.iter().map(|x| x * x).sum::<f64>() + bias * bias);
    if examples.is_empty() {
        return reg;
    }
    let hinge: f64 = examples
        .iter()
        .map(|e| (1.0 - e.label * (e.features.dot(weights) + bias)).max(0.0))
        .sum();
    reg + hinge / examples.len() as f64
}

/// A subgradient of [`objective`]; exact gradient away from hinge kinks.
pub fn objective_subgradient(
    weights: &[f64],
    bias: f64,
    examples: &[Example<'_>],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let mut g: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut gb = lambda * bias;
    let m = examples.len().max(1) as f64;
    for e in examples {
        if e.label * (e.features.dot(weights) + bias) < 1.0 {
            for &(i, v) in e.features.entries() {
                g[i as usize] -= e.label * v / m;
            }
            gb -= e.label / m;
        }
    }
    (g, gb)
}

/// Result of fitting one binary problem.
#[derive(Debug, Clone)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective after each epoch.
    pub epoch_objectives: Vec<f64>,
}

/// Runs `epochs` passes over `examples`, each in a fresh permutation drawn
/// from `rng`. The returned weights are the mean of the iterates at the ends
/// of the last `ceil(epochs / 2)` epochs; the single final iterate of a
/// small-lambda run swings too far on the last few examples it saw.
pub fn fit<R: Rng>(
    examples: &[Example<'_>],
    dim: usize,
    lambda: f64,
    epochs: usize,
    rng: &mut R,
    track_objective: bool,
) -> BinaryFit {
    let mut w = ScaledWeights::zeros(dim);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut t = 0u64;
    let mut epoch_objectives = Vec::new();
    let averaged_from = epochs / 2;
    let mut sum = vec![0.0; dim];
    let mut sum_bias = 0.0;
    for epoch in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            pegasos_step(&mut w, examples[i], lambda, t);
        }
        if track_objective || epoch >= averaged_from {
            let (dense, b) = w.dense();
            if track_objective {
                epoch_objectives.push(objective(&dense, b, examples, lambda));
            }
            if epoch >= averaged_from {
                sum.iter_mut().zip(&dense).for_each(|(s, x)| *s += x);
                sum_bias += b;
            }
        }
    }
    let (weights, bias) = if epochs == 0 {
        w.into_dense()
    } else {
        let k = (epochs - averaged_from) as f64;
        (sum.into_iter().map(|s| s / k).collect(), sum_bias / k)
    };
    BinaryFit {
        weights,
        bias,
        epoch_objectives,
    }
}
