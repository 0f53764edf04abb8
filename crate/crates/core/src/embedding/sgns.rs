//! Skip-gram with negative sampling.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingConfig, EmbeddingError, EmbeddingModel};

const MIN_LEARNING_RATE: f64 = 1e-4;
const NEGATIVE_POWER: f64 = 0.75;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(x))` without overflow.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Matrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Loss and gradient of one (center, context) pair against a fixed set of
/// negative samples:
///
/// `L = -ln σ(u_ctx · v_c) - Σ_k ln σ(-u_k · v_c)`
///
/// where `v` rows come from the input matrix and `u` rows from the output
/// matrix. Buffers are reused between calls.
#[derive(Debug, Default, Clone)]
pub struct PairGradient {
    pub loss: f64,
    /// dL/d input[center]
    pub center: Vec<f64>,
    /// (output row, dL/d output[row]); a row may appear more than once.
    pub outputs: Vec<(usize, Vec<f64>)>,
    used: usize,
}

impl PairGradient {
    pub fn compute(
        &mut self,
        input: &Matrix,
        output: &Matrix,
        center: usize,
        context: usize,
        negatives: &[usize],
    ) {
        let dim = input.dim;
        let v = input.row(center);
        self.center.clear();
        self.center.resize(dim, 0.0);
        self.used = 0;
        self.loss = 0.0;

        let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
        for (row, label) in targets {
            let u = output.row(row);
            let score = dot(u, v);
            // d/dscore of the pair loss is sigmoid(score) - label
            let g = sigmoid(score) - label;
            self.loss += if label > 0.5 {
                neg_log_sigmoid(score)
            } else {
                neg_log_sigmoid(-score)
            };
            for (c, &x) in self.center.iter_mut().zip(u) {
                *c += g * x;
            }
            if self.used == self.outputs.len() {
                self.outputs.push((row, vec![0.0; dim]));
            }
            let slot = &mut self.outputs[self.used];
            slot.0 = row;
            slot.1.clear();
            slot.1.extend(v.iter().map(|&x| g * x));
            self.used += 1;
        }
    }

    pub fn output_grads(&self) -> &[(usize, Vec<f64>)] {
        &self.outputs[..self.used]
    }

    /// Gradient descent step with learning rate `lr`.
    pub fn apply(&self, input: &mut Matrix, output: &mut Matrix, center: usize, lr: f64) {
        for (row, g) in self.output_grads() {
            for (p, d) in output.row_mut(*row).iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
        for (p, d) in input.row_mut(center).iter_mut().zip(&self.center) {
            *p -= lr * d;
        }
    }
}

/// Cumulative unigram^0.75 distribution for negative sampling.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(NEGATIVE_POWER);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocab");
        let x = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

/// Per-epoch training summary.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: u64,
}

/// Builds the vocabulary: tokens with count >= `min_count`, ordered by count
/// descending then token ascending.
pub(crate) fn build_vocab(corpus: &[Vec<String>], min_count: u64) -> (Vec<String>, Vec<u64>) {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for note in corpus {
        for t in note {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    entries.into_iter().map(|(t, c)| (t.to_string(), c)).unzip()
}

/// Trains word vectors. Single-threaded and fully determined by
/// `(corpus, config, seed)`.
pub fn train_with_report(
    corpus: &[Vec<String>],
    config: &EmbeddingConfig,
    seed: u64,
) -> Result<(EmbeddingModel, TrainReport), EmbeddingError> {
    config.validate()?;
    let (words, counts) = build_vocab(corpus, config.min_count);
    if words.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary {
            min_count: config.min_count,
        });
    }
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|note| note.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
        .collect();
    let words_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total_steps = (words_per_epoch * config.epochs as u64).max(1);

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut input = Matrix::zeros(words.len(), dim);
    for x in input.data.iter_mut() {
        *x = (rng.random::<f64>() - 0.5) / dim as f64;
    }
    let mut output = Matrix::zeros(words.len(), dim);
    let table = NegativeTable::new(&counts);

    let mut grad = PairGradient::default();
    let mut negatives = Vec::with_capacity(config.negative_samples);
    let mut processed = 0u64;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut pairs_per_epoch = 0;
    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let progress = processed as f64 / total_steps as f64;
                let lr = (config.initial_learning_rate
                    - (config.initial_learning_rate - MIN_LEARNING_RATE) * progress)
                    .max(MIN_LEARNING_RATE);
                processed += 1;

                let reach = rng.random_range(1..=config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    negatives.clear();
                    for _ in 0..config.negative_samples {
                        let n = table.sample(&mut rng);
                        if n != context {
                            negatives.push(n);
                        }
                    }
                    grad.compute(&input, &output, center, context, &negatives);
                    grad.apply(&mut input, &mut output, center, lr);
                    loss_sum += grad.loss;
                    pairs += 1;
                }
            }
        }
        pairs_per_epoch = pairs;
        epoch_losses.push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }

    let model = EmbeddingModel::from_parts(words, counts, input.data, dim, config.clone(), seed)?;
    Ok((
        model,
        TrainReport {
            epoch_losses,
            pairs_per_epoch,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_matrices(rows: usize, dim: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Matrix::zeros(rows, dim);
        let mut b = Matrix::zeros(rows, dim);
        for x in a.data.iter_mut().chain(b.data.iter_mut()) {
            *x = rng.random::<f64>() - 0.5;
        }
        (a, b)
    }

    fn total_loss(input: &Matrix, output: &Matrix, pairs: &[(usize, usize, Vec<usize>)]) -> f64 {
        let mut g = PairGradient::default();
        pairs
            .iter()
            .map(|(c, o, n)| {
                g.compute(input, output, *c, *o, n);
                g.loss
            })
            .sum()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn gradient_matches_central_differences() {
        // 5-token vocabulary; several pairs, including a repeated negative row.
        let (input, output) = toy_matrices(5, 4, 11);
        let pairs = vec![
            (0, 1, vec![2, 3]),
            (1, 4, vec![0, 0, 2]),
            (3, 2, vec![4, 1]),
        ];
        let mut g_in = Matrix::zeros(5, 4);
        let mut g_out = Matrix::zeros(5, 4);
        let mut g = PairGradient::default();
        for (c, o, n) in &pairs {
            g.compute(&input, &output, *c, *o, n);
            for (d, x) in g_in.row_mut(*c).iter_mut().zip(&g.center) {
                *d += x;
            }
            for (row, grad) in g.output_grads() {
                for (d, x) in g_out.row_mut(*row).iter_mut().zip(grad) {
                    *d += x;
                }
            }
        }

        let h = 1e-5;
        for which in 0..2 {
            for k in 0..input.data.len() {
                let (mut plus_in, mut plus_out) = (input.clone(), output.clone());
                let (mut minus_in, mut minus_out) = (input.clone(), output.clone());
                if which == 0 {
                    plus_in.data[k] += h;
                    minus_in.data[k] -= h;
                } else {
                    plus_out.data[k] += h;
                    minus_out.data[k] -= h;
                }
                let numeric = (total_loss(&plus_in, &plus_out, &pairs)
                    - total_loss(&minus_in, &minus_out, &pairs))
                    / (2.0 * h);
                let analytic = if which == 0 { g_in.data[k] } else { g_out.data[k] };
                if analytic.abs() < 1e-9 && numeric.abs() < 1e-9 {
                    continue;
                }
                assert!(
                    rel_err(analytic, numeric) < 1e-5,
                    "param {which}/{k}: analytic {analytic} numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn negative_table_follows_counts() {
        let table = NegativeTable::new(&[16, 1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 3];
        for _ in 0..9000 {
            hits[table.sample(&mut rng)] += 1;
        }
        // 16^0.75 = 8 vs 1: expect ~8/9 of draws on row 0, none on row 2
        assert_eq!(hits[2], 0);
        let frac = hits[0] as f64 / 9000.0;
        assert!((frac - 8.0 / 9.0).abs() < 0.02, "{frac}");
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0).is_finite());
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
