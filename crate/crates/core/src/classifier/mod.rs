//! Per-label linear SVMs trained from matcher-positive notes.
//!
//! For every label the matcher's non-negated hits define the positive notes;
//! a seeded uniform sample of the remaining notes serves as provisional
//! negatives. Features are one indicator per active simclin phrase matched
//! without negation, followed by a 2^18-wide block of hashed unigram
//! indicators (FNV-1a 64 over the token bytes).

pub mod pegasos;
mod persist;

use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Note, Token};
use crate::label::{LabelVector, PhenotypeLabel, LABEL_COUNT};
use crate::lexicon::Lexicon;
use crate::matcher::{note_label_vector, Match, Matcher, NegationConfig};

pub use persist::{MODEL_MAGIC, MODEL_VERSION};

pub const HASH_BITS: u32 = 18;
pub const HASH_DIM: usize = 1 << HASH_BITS;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no note has a non-negated simclin match; nothing to learn from")]
    NoPositives,
    #[error("lexicon has no seed or accepted simclins")]
    EmptyLexicon,
    #[error("invalid classifier parameters: {0}")]
    InvalidParams(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// FNV-1a, 64-bit.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Sparse binary feature vector, indices strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
    dim: usize,
}

impl FeatureVector {
    /// Sorts and merges duplicate indices (values summed).
    pub fn from_entries(mut entries: Vec<(u32, f64)>, dim: usize) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            debug_assert!((i as usize) < dim);
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        FeatureVector { entries: merged, dim }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| w[i as usize] * v).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }
}

/// Feature index layout: simclin phrases (sorted) first, then the hash block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    simclin_phrases: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl FeatureSpace {
    pub fn new(phrases: impl IntoIterator<Item = String>) -> Self {
        let simclin_phrases: Vec<String> = phrases.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = simclin_phrases
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        FeatureSpace {
            simclin_phrases,
            index,
        }
    }

    pub fn from_lexicon(lexicon: &Lexicon) -> Self {
        Self::new(lexicon.active_simclins().map(|s| s.phrase.clone()))
    }

    pub fn simclin_phrases(&self) -> &[String] {
        &self.simclin_phrases
    }

    pub fn simclin_count(&self) -> usize {
        self.simclin_phrases.len()
    }

    pub fn dimension(&self) -> usize {
        self.simclin_phrases.len() + HASH_DIM
    }

    pub fn simclin_index(&self, phrase: &str) -> Option<u32> {
        self.index.get(phrase).copied()
    }

    pub fn hashed_index(&self, token: &str) -> u32 {
        let h = fnv1a(token.as_bytes()) & (HASH_DIM as u64 - 1);
        (self.simclin_phrases.len() as u64 + h) as u32
    }

    /// Indicators for non-negated matches whose phrase is in the space, plus
    /// one hashed indicator per distinct token.
    pub fn featurize(&self, tokens: &[Token], matches: &[Match]) -> FeatureVector {
        let mut idx: BTreeSet<u32> = BTreeSet::new();
        for m in matches.iter().filter(|m| !m.negated) {
            if let Some(i) = self.simclin_index(&m.phrase) {
                idx.insert(i);
            }
        }
        for t in tokens {
            idx.insert(self.hashed_index(&t.surface));
        }
        FeatureVector {
            entries: idx.into_iter().map(|i| (i, 1.0)).collect(),
            dim: self.dimension(),
        }
    }
}

/// A compiled matcher plus feature layout; featurizes notes repeatedly.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub space: FeatureSpace,
    matcher: Matcher,
    negation: NegationConfig,
}

/// Everything derived from one note during featurization.
#[derive(Debug, Clone)]
pub struct FeaturizedNote {
    pub features: FeatureVector,
    pub matches: Vec<Match>,
    pub matcher_labels: LabelVector,
}

impl Featurizer {
    pub fn new(space: FeatureSpace, lexicon: &Lexicon, negation: NegationConfig) -> Self {
        Featurizer {
            space,
            matcher: Matcher::new(lexicon),
            negation,
        }
    }

    pub fn featurize(&self, note: &Note) -> FeaturizedNote {
        let tokens = note.tokens();
        let matches = self.matcher.analyze(&note.note_id, &tokens, &self.negation);
        FeaturizedNote {
            features: self.space.featurize(&tokens, &matches),
            matcher_labels: note_label_vector(&matches),
            matches,
        }
    }
}

/// Features of one note under the lexicon's own feature space.
pub fn featurize(note: &Note, lexicon: &Lexicon) -> FeatureVector {
    Featurizer::new(FeatureSpace::from_lexicon(lexicon), lexicon, NegationConfig::default())
        .featurize(note)
        .features
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Negatives sampled per positive.
    pub negative_sample_ratio: f64,
    pub negation: NegationConfig,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            lambda: 1e-4,
            epochs: 20,
            seed: 0,
            negative_sample_ratio: 1.0,
            negation: NegationConfig::default(),
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ClassifierError::InvalidParams(format!("lambda {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(ClassifierError::InvalidParams("epochs must be >= 1".into()));
        }
        if !(self.negative_sample_ratio >= 0.0 && self.negative_sample_ratio.is_finite()) {
            return Err(ClassifierError::InvalidParams(format!(
                "negative_sample_ratio {}",
                self.negative_sample_ratio
            )));
        }
        self.negation
            .validate()
            .map_err(|e| ClassifierError::InvalidParams(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelModel {
    pub label: PhenotypeLabel,
    /// False when the label had no positive notes; such a label always predicts 0.
    pub trained: bool,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl LabelModel {
    fn untrained(label: PhenotypeLabel) -> Self {
        LabelModel {
            label,
            trained: false,
            weights: Vec::new(),
            bias: 0.0,
            positives: 0,
            negatives: 0,
        }
    }

    pub fn margin(&self, x: &FeatureVector) -> f64 {
        if self.trained {
            x.dot(&self.weights) + self.bias
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub space: FeatureSpace,
    /// One per label, canonical order.
    pub labels: Vec<LabelModel>,
    pub params: ClassifierParams,
}

impl LinearModel {
    pub fn label(&self, label: PhenotypeLabel) -> &LabelModel {
        &self.labels[label.ordinal()]
    }
}

/// Fits one model per label; see the module docs for the sampling scheme.
pub fn train_pu(
    notes: &[Note],
    lexicon: &Lexicon,
    params: &ClassifierParams,
) -> Result<LinearModel, ClassifierError> {
    params.validate()?;
    if notes.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    let space = FeatureSpace::from_lexicon(lexicon);
    if space.simclin_count() == 0 {
        return Err(ClassifierError::EmptyLexicon);
    }
    let featurizer = Featurizer::new(space.clone(), lexicon, params.negation);
    let data: Vec<FeaturizedNote> = notes.iter().map(|n| featurizer.featurize(n)).collect();
    if data.iter().all(|d| d.matcher_labels.count() == 0) {
        return Err(ClassifierError::NoPositives);
    }

    let dim = space.dimension();
    let labels: Vec<LabelModel> = PhenotypeLabel::ALL
        .par_iter()
        .map(|&label| train_label(label, &data, dim, params))
        .collect();
    Ok(LinearModel {
        space,
        labels,
        params: params.clone(),
    })
}

fn label_rng(seed: u64, label: PhenotypeLabel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label.ordinal() as u64 + 1);
    rng
}

fn train_label(
    label: PhenotypeLabel,
    data: &[FeaturizedNote],
    dim: usize,
    params: &ClassifierParams,
) -> LabelModel {
    let (pos, rest): (Vec<usize>, Vec<usize>) =
        (0..data.len()).partition(|&i| data[i].matcher_labels.get(label));
    if pos.is_empty() {
        return LabelModel::untrained(label);
    }
    let mut rng = label_rng(params.seed, label);
    let wanted = ((pos.len() as f64) * params.negative_sample_ratio).round() as usize;
    let k = wanted.min(rest.len());
    let mut neg: Vec<usize> = sample(&mut rng, rest.len(), k).into_iter().map(|j| rest[j]).collect();
    neg.sort_unstable();

    let examples: Vec<pegasos::Example> = pos
        .iter()
        .map(|&i| pegasos::Example {
            features: &data[i].features,
            label: 1.0,
        })
        .chain(neg.iter().map(|&i| pegasos::Example {
            features: &data[i].features,
            label: -1.0,
        }))
        .collect();
    let fit = pegasos::fit(&examples, dim, params.lambda, params.epochs, &mut rng, false);
    LabelModel {
        label,
        trained: true,
        weights: fit.weights,
        bias: fit.bias,
        positives: pos.len(),
        negatives: neg.len(),
    }
}

/// Binary decisions and raw margins for one note.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: LabelVector,
    /// `NEG_INFINITY` for untrained labels.
    pub margins: [f64; LABEL_COUNT],
}

impl Prediction {
    pub fn from_margins(margins: [f64; LABEL_COUNT]) -> Self {
        let mut labels = LabelVector::empty();
        for l in PhenotypeLabel::ALL {
            labels.set(l, margins[l.ordinal()] > 0.0);
        }
        Prediction { labels, margins }
    }
}

/// A model bound to a lexicon for repeated prediction.
#[derive(Debug, Clone)]
pub struct Predictor<'m> {
    model: &'m LinearModel,
    featurizer: Featurizer,
}

impl<'m> Predictor<'m> {
    pub fn new(model: &'m LinearModel, lexicon: &Lexicon) -> Self {
        Predictor {
            model,
            featurizer: Featurizer::new(model.space.clone(), lexicon, model.params.negation),
        }
    }

    pub fn predict_features(&self, x: &FeatureVector) -> Prediction {
        let mut margins = [0.0; LABEL_COUNT];
        for (m, lm) in margins.iter_mut().zip(&self.model.labels) {
            *m = lm.margin(x);
        }
        Prediction::from_margins(margins)
    }

    pub fn predict(&self, note: &Note) -> Prediction {
        self.predict_features(&self.featurizer.featurize(note).features)
    }

    /// Predictions for all notes, in input order.
    pub fn predict_all(&self, notes: &[Note]) -> Vec<Prediction> {
        notes.par_iter().map(|n| self.predict(n)).collect()
    }

    /// [`Self::predict_all`] on a dedicated pool of `workers` threads
    /// (1 = in the calling thread).
    pub fn predict_all_on(&self, notes: &[Note], workers: usize) -> Vec<Prediction> {
        if workers <= 1 {
            return notes.iter().map(|n| self.predict(n)).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| self.predict_all(notes)),
            Err(e) => {
                log::warn!("could not start {workers} workers ({e}); using the global pool");
                self.predict_all(notes)
            }
        }
    }
}

pub fn predict(model: &LinearModel, note: &Note, lexicon: &Lexicon) -> Prediction {
    Predictor::new(model, lexicon).predict(note)
}
