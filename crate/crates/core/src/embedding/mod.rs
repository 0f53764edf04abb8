//! Word and phrase vectors trained on the note corpus, with cosine
//! nearest-neighbor queries used for lexicon expansion.

mod phrases;
mod sgns;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use phrases::{bigram_score, detect_phrases, PHRASE_JOINER};
pub use sgns::{train_with_report, Matrix, PairGradient, TrainReport};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("token {0:?} is not in the embedding vocabulary")]
    OutOfVocabulary(String),
    #[error("no token reaches min_count {min_count}; vocabulary is empty")]
    EmptyVocabulary { min_count: u64 },
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("vector file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub min_count: u64,
    /// Decays linearly to 1e-4 over all epochs.
    pub initial_learning_rate: f64,
    pub phrase_min_count: u64,
    pub phrase_score_threshold: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 100,
            window: 5,
            negative_samples: 5,
            epochs: 5,
            min_count: 2,
            initial_learning_rate: 0.025,
            phrase_min_count: 3,
            phrase_score_threshold: 10.0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dim < 2 {
            return bad("dim must be >= 2");
        }
        if self.window == 0 || self.negative_samples == 0 || self.epochs == 0 || self.min_count == 0 {
            return bad("window, negative_samples, epochs and min_count must be positive");
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.initial_learning_rate) || !positive(self.phrase_score_threshold) {
            return bad("learning rate and phrase threshold must be positive");
        }
        if self.phrase_min_count == 0 {
            return bad("phrase_min_count must be positive");
        }
        Ok(())
    }
}

/// Immutable vocabulary plus dense vectors.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    vocab: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<u64>,
    vectors: Vec<f64>,
    norms: Vec<f64>,
    dim: usize,
    config: EmbeddingConfig,
    seed: u64,
}

impl PartialEq for EmbeddingModel {
    /// Models compare by vocabulary order and vector bits.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.words == other.words
            && self.vectors.len() == other.vectors.len()
            && self
                .vectors
                .iter()
                .zip(&other.vectors)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Trains skip-gram vectors; see [`train_with_report`].
pub fn train(
    corpus: &[Vec<String>],
    config: &EmbeddingConfig,
    seed: u64,
) -> Result<EmbeddingModel, EmbeddingError> {
    train_with_report(corpus, config, seed).map(|(m, _)| m)
}

/// Cosine similarity of two vectors; 0 when either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    cosine_from_parts(dot, na, nb)
}

fn cosine_from_parts(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

impl EmbeddingModel {
    fn from_parts(
        words: Vec<String>,
        counts: Vec<u64>,
        vectors: Vec<f64>,
        dim: usize,
        config: EmbeddingConfig,
        seed: u64,
    ) -> Result<Self, EmbeddingError> {
        if dim < 2 {
            return Err(EmbeddingError::InvalidConfig("dim must be >= 2".into()));
        }
        assert_eq!(vectors.len(), words.len() * dim);
        if let Some(i) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(EmbeddingError::InvalidConfig(format!(
                "non-finite component for token {:?}",
                words[i / dim]
            )));
        }
        let mut vocab = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if vocab.insert(w.clone(), i).is_some() {
                return Err(EmbeddingError::InvalidConfig(format!("duplicate token {w:?}")));
            }
        }
        let norms = vectors
            .chunks(dim)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        Ok(EmbeddingModel {
            vocab,
            words,
            counts,
            vectors,
            norms,
            dim,
            config,
            seed,
        })
    }

    /// Builds a model from explicit vectors (fixtures, imported files).
    pub fn from_vectors<S: Into<String>>(
        entries: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, EmbeddingError> {
        let mut words = Vec::new();
        let mut vectors = Vec::new();
        let mut dim = None;
        for (w, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(EmbeddingError::InvalidConfig(format!(
                    "vector length {} differs from {}",
                    v.len(),
                    d
                )));
            }
            words.push(w.into());
            vectors.extend(v);
        }
        let dim = dim.unwrap_or(0);
        let counts = vec![0; words.len()];
        let config = EmbeddingConfig {
            dim,
            ..EmbeddingConfig::default()
        };
        Self::from_parts(words, counts, vectors, dim, config, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Vocabulary in index order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Training-corpus frequency (0 for models built from vectors).
    pub fn count(&self, token: &str) -> Option<u64> {
        self.vocab.get(token).map(|&i| self.counts[i])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocab.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    fn lookup(&self, token: &str) -> Result<usize, EmbeddingError> {
        self.index_of(token)
            .ok_or_else(|| EmbeddingError::OutOfVocabulary(token.to_string()))
    }

    fn similarity_by_index(&self, i: usize, j: usize) -> f64 {
        let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(x, y)| x * y).sum();
        cosine_from_parts(dot, self.norms[i], self.norms[j])
    }

    /// Cosine similarity between two vocabulary tokens.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let i = self.lookup(a)?;
        let j = self.lookup(b)?;
        Ok(self.similarity_by_index(i, j))
    }

    /// Every other token with similarity >= `min_similarity`, best first,
    /// ties broken by token; at most `limit` entries.
    pub fn neighbors(
        &self,
        term: &str,
        min_similarity: f64,
        limit: usize,
    ) -> Result<Vec<(String, f64)>, EmbeddingError> {
        let i = self.lookup(term)?;
        let mut hits: Vec<(usize, f64)> = (0..self.words.len())
            .filter(|&j| j != i)
            .map(|j| (j, self.similarity_by_index(i, j)))
            .filter(|&(_, s)| s >= min_similarity)
            .collect();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.words[a.0].cmp(&self.words[b.0]))
        });
        hits.truncate(limit);
        Ok(hits.into_iter().map(|(j, s)| (self.words[j].clone(), s)).collect())
    }

    /// Writes the text vector format: a `<vocab_size> <dim>` header, then one
    /// `<token> <v1> ... <vdim>` line per token with shortest round-trip floats.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.words.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_all(word.as_bytes())?;
            for x in self.row(i) {
                write!(w, " {x:?}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let f = std::fs::File::create(path)?;
        self.write_text(std::io::BufWriter::new(f))?;
        Ok(())
    }

    /// Reads the text vector format. Training hyperparameters are not part of
    /// the file; the loaded model carries defaults with the file's `dim`.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self, EmbeddingError> {
        let mut lines = r.lines();
        let perr = |line: usize, message: String| EmbeddingError::Parse { line, message };
        let header = lines
            .next()
            .ok_or_else(|| perr(1, "missing header".into()))??;
        let mut parts = header.split_whitespace();
        let (n, dim) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(d), None) => (
                n.parse::<usize>().map_err(|e| perr(1, format!("vocab size: {e}")))?,
                d.parse::<usize>().map_err(|e| perr(1, format!("dim: {e}")))?,
            ),
            _ => return Err(perr(1, "header must be \"<vocab_size> <dim>\"".into())),
        };
        let mut entries = Vec::with_capacity(n);
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let token = fields.next().unwrap_or_default().to_string();
            let v = fields
                .map(|f| f.parse::<f64>().map_err(|e| perr(lineno, format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != dim {
                return Err(perr(lineno, format!("expected {dim} components, found {}", v.len())));
            }
            entries.push((token, v));
        }
        if entries.len() != n {
            return Err(perr(
                entries.len() + 2,
                format!("header declares {n} tokens, found {}", entries.len()),
            ));
        }
        if n == 0 {
            return Err(perr(1, "empty vocabulary".into()));
        }
        Self::from_vectors(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let f = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(f))
    }
}
