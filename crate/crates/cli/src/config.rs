//! Run configuration: an optional JSON file of parameter blocks, overridden
//! by command-line flags.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "workers": 4,
//!   "embedding": {"dim": 100, "epochs": 5},
//!   "classifier": {"lambda": 0.0001},
//!   "negation": {"pre_window": 5, "post_window": 3},
//!   "llm": {"endpoint": "http://127.0.0.1:8080/v1/chat/completions"}
//! }
//! ```
//!
//! Every block is optional and every field inside a block falls back to its
//! default. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use pheno_core::classifier::ClassifierParams;
use pheno_core::embedding::EmbeddingConfig;
use pheno_core::llm::LlmConfig;
use pheno_core::matcher::NegationConfig;
use serde::Deserialize;

use crate::error::{CliError, CliResult, ErrorCode};

pub const DEFAULT_WORKERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub embedding: EmbeddingConfig,
    pub classifier: ClassifierParams,
    pub negation: NegationConfig,
    pub llm: LlmConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: DEFAULT_WORKERS,
            embedding: EmbeddingConfig::default(),
            classifier: ClassifierParams::default(),
            negation: NegationConfig::default(),
            llm: LlmConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_input(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::new(ErrorCode::Schema, format!("run config: {e}")).at(path))
    }

    /// Applies the global `--seed` and `--workers` flags. The seed reaches
    /// every randomized stage.
    pub fn with_overrides(mut self, seed: Option<u64>, workers: Option<usize>) -> CliResult<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(w) = workers {
            self.workers = w;
        }
        if self.workers == 0 {
            return Err(CliError::new(ErrorCode::InvalidArgument, "workers must be >= 1"));
        }
        self.classifier.seed = self.seed;
        self.llm.seed = self.seed;
        self.llm.workers = self.workers;
        Ok(self)
    }
}

/// Fails with `missing-file` unless `path` is an existing file.
pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(ErrorCode::MissingFile, format!("{} does not exist or is not a file", path.display())))
    }
}

pub fn read_input(path: &Path) -> CliResult<String> {
    require_file(path)?;
    std::fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))
}

/// Fails with `missing-file` unless the directory that will hold `path`
/// exists.
pub fn require_output_dir(path: &Path) -> CliResult<()> {
    let parent: PathBuf = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::new(
            ErrorCode::MissingFile,
            format!("output directory {} does not exist", parent.display()),
        ))
    }
}
