//! Command failures and their exit codes.
//!
//! Every failure prints one line, `ERROR <code>: <detail>`, on stderr. Codes
//! for bad input (flags, missing files, malformed documents, impossible
//! parameters) exit with 1; failures while doing the work exit with 2.

use std::fmt;
use std::path::Path;

use pheno_core::classifier::ClassifierError;
use pheno_core::corpus::CorpusError;
use pheno_core::embedding::EmbeddingError;
use pheno_core::evaluation::EvalError;
use pheno_core::lexicon::LexiconError;
use pheno_core::llm::LlmError;
use pheno_core::matcher::MatchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Usage,
    MissingFile,
    InvalidArgument,
    Schema,
    EmptyLexicon,
    Alignment,
    Config,
    Io,
    Training,
    Llm,
    Auth,
    PortInUse,
    Server,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Usage => "usage",
            ErrorCode::MissingFile => "missing-file",
            ErrorCode::InvalidArgument => "invalid-argument",
            ErrorCode::Schema => "schema",
            ErrorCode::EmptyLexicon => "empty-lexicon",
            ErrorCode::Alignment => "alignment",
            ErrorCode::Config => "config",
            ErrorCode::Io => "io",
            ErrorCode::Training => "training",
            ErrorCode::Llm => "llm",
            ErrorCode::Auth => "auth",
            ErrorCode::PortInUse => "port-in-use",
            ErrorCode::Server => "server",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Usage
            | ErrorCode::MissingFile
            | ErrorCode::InvalidArgument
            | ErrorCode::Schema
            | ErrorCode::EmptyLexicon
            | ErrorCode::Alignment
            | ErrorCode::Config => 1,
            ErrorCode::Io
            | ErrorCode::Training
            | ErrorCode::Llm
            | ErrorCode::Auth
            | ErrorCode::PortInUse
            | ErrorCode::Server => 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub struct CliError {
    pub code: ErrorCode,
    pub detail: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ERROR {}: {}", self.code.as_str(), self.detail)
    }
}

impl CliError {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        // keep the report on one line
        let detail = detail.into().replace(['\n', '\r'], " ");
        CliError { code, detail }
    }

    pub fn exit_code(&self) -> i32 {
        self.code.exit_code()
    }

    /// Prefixes the detail with the file it concerns.
    pub fn at(mut self, path: &Path) -> Self {
        self.detail = format!("{}: {}", path.display(), self.detail);
        self
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io(e: std::io::Error) -> CliError {
    CliError::new(ErrorCode::Io, e.to_string())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        io(e)
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        let code = match &e {
            LexiconError::Parse { .. } | LexiconError::Schema(_) => ErrorCode::Schema,
            LexiconError::Io(_) => ErrorCode::Io,
            _ => ErrorCode::InvalidArgument,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let code = match &e {
            CorpusError::Io { .. } => ErrorCode::Io,
            _ => ErrorCode::Schema,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        let code = match &e {
            EmbeddingError::Parse { .. } => ErrorCode::Schema,
            EmbeddingError::InvalidConfig(_) => ErrorCode::InvalidArgument,
            EmbeddingError::OutOfVocabulary(_) => ErrorCode::InvalidArgument,
            EmbeddingError::EmptyVocabulary { .. } => ErrorCode::Training,
            EmbeddingError::Io(_) => ErrorCode::Io,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        let code = match &e {
            MatchError::InvalidWindow { .. } => ErrorCode::InvalidArgument,
            MatchError::Pool(_) => ErrorCode::Training,
            MatchError::Io(_) => ErrorCode::Io,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        let code = match &e {
            ClassifierError::EmptyLexicon => ErrorCode::EmptyLexicon,
            ClassifierError::EmptyCorpus | ClassifierError::NoPositives | ClassifierError::InvalidParams(_) => {
                ErrorCode::InvalidArgument
            }
            ClassifierError::Format(_) => ErrorCode::Schema,
            ClassifierError::Io(_) => ErrorCode::Io,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        let code = match &e {
            LlmError::Config(_) | LlmError::MissingToken(_) => ErrorCode::Config,
            LlmError::Auth { .. } => ErrorCode::Auth,
            LlmError::Audit { .. } => ErrorCode::Schema,
            LlmError::Io(_) => ErrorCode::Io,
            _ => ErrorCode::Llm,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Annotation { .. } | EvalError::MatrixFormat { .. } | EvalError::Csv(_) => ErrorCode::Schema,
            EvalError::OrphanNote(_) | EvalError::DuplicateNote(_) | EvalError::Alignment(_) => ErrorCode::Alignment,
            EvalError::InvalidOption(_) => ErrorCode::InvalidArgument,
            EvalError::Io(_) => ErrorCode::Io,
        };
        CliError::new(code, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_and_exit_codes() {
        let e = CliError::new(ErrorCode::Schema, "line 3:\nbad");
        assert_eq!(e.to_string(), "ERROR schema: line 3: bad");
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::new(ErrorCode::PortInUse, "x").exit_code(), 2);
        let from: CliError = ClassifierError::EmptyLexicon.into();
        assert_eq!((from.code, from.exit_code()), (ErrorCode::EmptyLexicon, 1));
        let auth: CliError = LlmError::Auth { status: 401 }.into();
        assert_eq!(auth.exit_code(), 2);
    }
}
