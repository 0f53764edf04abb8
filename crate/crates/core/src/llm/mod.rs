//! Chat-completion adapter: one note per turn, a fixed instruction block, and
//! a strict line-oriented answer parsed into a label vector.
//!
//! Building requests and parsing answers are pure. Network access happens
//! only in [`client`], and corpus runs with audit logging live in [`run`].

pub mod client;
pub mod parse;
pub mod prompt;
pub mod run;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{Completion, LlmClient, RateLimiter};
pub use parse::{parse_response, render, render_vector, ParseError, ParsedPhenotype};
pub use prompt::{build_request, instructions, ChatMessage, ChatRequest, Session, INSTRUCTIONS};
pub use run::{read_audit, rescore_audit, run_corpus, AuditLog, AuditRecord, LlmRun, NoteOutcome};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("environment variable {0} with the API token is not set")]
    MissingToken(String),
    #[error("note {0:?} has no text")]
    EmptyNote(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport failed after {attempts} attempt(s){}: {message}", last_status.map(|s| format!(", last status {s}")).unwrap_or_default())]
    Transport {
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },
    #[error("malformed completion envelope: {0}")]
    Protocol(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("audit log line {line}: {message}")]
    Audit { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LlmError {
    /// Errors that stop a whole corpus run rather than a single note.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            LlmError::Config(_) | LlmError::MissingToken(_) | LlmError::Auth { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// First backoff delay; doubles per retry, plus up to one base of jitter.
    pub backoff_base_ms: u64,
    pub temperature: f64,
    /// Send the instructions once per session (requires a server that keeps
    /// conversation state keyed by `session_id`). Off: every request carries them.
    pub sessions: bool,
    /// Append a system message describing the expected answer lines.
    pub format_hint: bool,
    pub workers: usize,
    pub requests_per_minute: Option<f64>,
    /// Seeds backoff jitter and session ids.
    pub seed: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "gpt-4".into(),
            token_env: "PHENO_LLM_TOKEN".into(),
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_base_ms: 2000,
            temperature: 0.0,
            sessions: false,
            format_hint: true,
            workers: 4,
            requests_per_minute: None,
            seed: 0,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: String| Err(LlmError::Config(m));
        if self.endpoint.trim().is_empty() {
            return bad("endpoint is empty".into());
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad(format!("timeout_secs must be > 0, got {}", self.timeout_secs));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if let Some(r) = self.requests_per_minute {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("requests_per_minute must be > 0, got {r}"));
            }
        }
        Ok(())
    }
}
