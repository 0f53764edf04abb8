//! JSON API for reviewing simclin candidates.
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET | `/api/labels` | |
//! | GET | `/api/lexicon` | |
//! | GET | `/api/candidates` | `label`, `offset`, `limit` |
//! | POST | `/api/decision` | `{phrase, label, decision}` |
//! | POST | `/api/regenerate` | |
//! | GET | `/api/contexts` | `phrase`, `limit` |
//! | GET | `/api/negations` | |
//! | POST | `/api/negations` | `{phrase, position}` |
//! | DELETE | `/api/negations` | `{phrase, position}` |
//!
//! Errors are `{"error": {"code", "message"}}`. Every lexicon mutation is
//! written to the lexicon file (write-then-rename) before the response is
//! sent, under one lock, so an acknowledged decision survives a restart.
//! Each `(phrase, label)` carries a version that increases whenever its
//! status changes; replaying a decision that is already in effect is a no-op
//! and returns the same version.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::{Json, Router};
use pheno_core::corpus::{Note, Token};
use pheno_core::embedding::EmbeddingModel;
use pheno_core::lexicon::{
    normalize_phrase, Candidate, Decision, Lexicon, LexiconError, NegationPosition, NegationTerm, SimclinStatus,
    SkippedAnchor,
};
use pheno_core::PhenotypeLabel;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, ErrorCode};

/// Snippet context on each side of a phrase occurrence, in tokens.
pub const CONTEXT_TOKENS: usize = 10;
pub const DEFAULT_CONTEXTS: usize = 20;
pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 1000;

type Key = (PhenotypeLabel, String);

struct Inner {
    lexicon: Lexicon,
    path: PathBuf,
    candidates: Vec<Candidate>,
    skipped: Vec<SkippedAnchor>,
    versions: HashMap<Key, u64>,
    generation: u64,
}

pub struct ReviewState {
    inner: Mutex<Inner>,
    model: EmbeddingModel,
    notes: Vec<(Note, Vec<Token>)>,
    limit_per_seed: usize,
}

impl ReviewState {
    /// Generates the first candidate batch. `path` is where the lexicon is
    /// persisted after every mutation.
    pub fn new(lexicon: Lexicon, path: PathBuf, model: EmbeddingModel, notes: Vec<Note>, limit_per_seed: usize) -> Self {
        let batch = lexicon.generate_candidates(&model, limit_per_seed);
        let notes = notes
            .into_iter()
            .map(|n| {
                let t = n.tokens();
                (n, t)
            })
            .collect();
        ReviewState {
            inner: Mutex::new(Inner {
                lexicon,
                path,
                candidates: batch.candidates,
                skipped: batch.skipped,
                versions: HashMap::new(),
                generation: 1,
            }),
            model,
            notes,
            limit_per_seed,
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// A copy of the current lexicon.
    pub fn lexicon(&self) -> Lexicon {
        self.lock().lexicon.clone()
    }
}

pub fn router(state: Arc<ReviewState>) -> Router {
    Router::new()
        .route("/api/labels", get(labels))
        .route("/api/lexicon", get(lexicon))
        .route("/api/candidates", get(candidates))
        .route("/api/decision", post(decision))
        .route("/api/regenerate", post(regenerate))
        .route("/api/contexts", get(contexts))
        .route("/api/negations", get(negations).post(add_negation).delete(remove_negation))
        .route("/api/{*rest}", any(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint") }))
        .with_state(state)
}

/// Binds `host:port` and serves until interrupted. Prints
/// `listening on http://<addr>` once the socket is bound.
pub fn serve(state: ReviewState, host: &str, port: u16, ui_dir: Option<PathBuf>) -> CliResult<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(ErrorCode::Server, e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(|e| {
            let code = if e.kind() == std::io::ErrorKind::AddrInUse {
                ErrorCode::PortInUse
            } else {
                ErrorCode::Server
            };
            CliError::new(code, format!("cannot bind {host}:{port}: {e}"))
        })?;
        let addr: SocketAddr = listener.local_addr()?;
        let mut app = router(Arc::new(state));
        if let Some(dir) = ui_dir {
            app = app.fallback_service(tower_http::services::ServeDir::new(dir));
        }
        {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            writeln!(out, "listening on http://{addr}")?;
            out.flush()?;
        }
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::new(ErrorCode::Server, e.to_string()))
    })
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": {"code": self.code, "message": self.message}}))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request("invalid-body", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request("invalid-query", r.body_text())
    }
}

impl From<LexiconError> for ApiError {
    fn from(e: LexiconError) -> Self {
        let (status, code) = match &e {
            LexiconError::SeedImmutable { .. } => (StatusCode::CONFLICT, "seed-immutable"),
            LexiconError::DuplicateNegation { .. } => (StatusCode::CONFLICT, "duplicate-negation"),
            LexiconError::UnknownNegation { .. } => (StatusCode::NOT_FOUND, "unknown-negation"),
            LexiconError::EmptyPhrase => (StatusCode::BAD_REQUEST, "empty-phrase"),
            _ => (StatusCode::BAD_REQUEST, "invalid-request"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_label(s: &str) -> Result<PhenotypeLabel, ApiError> {
    s.parse().map_err(|_| ApiError::bad_request("invalid-label", format!("unknown label {s:?}")))
}

/// Saves the lexicon; on failure restores `before` so memory never runs
/// ahead of the file.
fn persist(inner: &mut Inner, before: Lexicon) -> Result<(), ApiError> {
    if let Err(e) = inner.lexicon.save(&inner.path) {
        inner.lexicon = before;
        log::error!("could not save lexicon to {}: {e}", inner.path.display());
        return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persist-failed", e.to_string()));
    }
    Ok(())
}

#[derive(Serialize)]
struct LabelInfo {
    name: &'static str,
    display_name: &'static str,
    ordinal: usize,
}

async fn labels() -> Json<Vec<LabelInfo>> {
    Json(
        PhenotypeLabel::ALL
            .iter()
            .map(|l| LabelInfo { name: l.name(), display_name: l.display_name(), ordinal: l.ordinal() })
            .collect(),
    )
}

async fn lexicon(State(s): State<Arc<ReviewState>>) -> ApiResult<Value> {
    let text = s.lock().lexicon.to_json();
    serde_json::from_str(&text)
        .map(Json)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

#[derive(Deserialize)]
struct CandidateQuery {
    label: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

#[derive(Serialize)]
struct CandidateRow {
    phrase: String,
    label: PhenotypeLabel,
    similarity: f64,
    nearest_seed: String,
    decision: &'static str,
    version: u64,
}

#[derive(Serialize)]
struct CandidatePage {
    generation: u64,
    total: usize,
    undecided: usize,
    offset: usize,
    limit: usize,
    candidates: Vec<CandidateRow>,
}

fn decision_state(lex: &Lexicon, phrase: &str, label: PhenotypeLabel) -> &'static str {
    match lex.get(phrase, label).map(|s| s.status) {
        Some(SimclinStatus::Accepted) => "accepted",
        Some(SimclinStatus::Rejected) => "rejected",
        _ => "undecided",
    }
}

/// The current batch in similarity order, decided rows included with their
/// state so a reloaded page shows what was already reviewed.
async fn candidates(
    State(s): State<Arc<ReviewState>>,
    query: Result<Query<CandidateQuery>, QueryRejection>,
) -> ApiResult<CandidatePage> {
    let Query(q) = query?;
    let label = q.label.as_deref().filter(|l| !l.is_empty()).map(parse_label).transpose()?;
    let offset = q.offset.unwrap_or(0);
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::bad_request("invalid-query", format!("limit must be in 1..={MAX_PAGE}")));
    }
    let inner = s.lock();
    let rows: Vec<CandidateRow> = inner
        .candidates
        .iter()
        .filter(|c| label.is_none_or(|l| c.label == l))
        .map(|c| CandidateRow {
            phrase: c.phrase.clone(),
            label: c.label,
            similarity: c.similarity,
            nearest_seed: c.nearest_seed.clone(),
            decision: decision_state(&inner.lexicon, &c.phrase, c.label),
            version: inner.versions.get(&(c.label, c.phrase.clone())).copied().unwrap_or(0),
        })
        .collect();
    let total = rows.len();
    let undecided = rows.iter().filter(|r| r.decision == "undecided").count();
    Ok(Json(CandidatePage {
        generation: inner.generation,
        total,
        undecided,
        offset,
        limit,
        candidates: rows.into_iter().skip(offset).take(limit).collect(),
    }))
}

#[derive(Deserialize)]
struct DecisionBody {
    phrase: String,
    label: String,
    decision: String,
}

#[derive(Serialize)]
struct DecisionAck {
    phrase: String,
    label: PhenotypeLabel,
    decision: &'static str,
    version: u64,
    /// False when the decision was already in effect.
    changed: bool,
}

async fn decision(
    State(s): State<Arc<ReviewState>>,
    body: Result<Json<DecisionBody>, JsonRejection>,
) -> ApiResult<DecisionAck> {
    let Json(b) = body?;
    let label = parse_label(&b.label)?;
    let decision: Decision = b.decision.parse().map_err(|m: String| ApiError::bad_request("invalid-decision", m))?;
    let phrase = normalize_phrase(&b.phrase);
    if phrase.is_empty() {
        return Err(LexiconError::EmptyPhrase.into());
    }
    let status = match decision {
        Decision::Accept => SimclinStatus::Accepted,
        Decision::Reject => SimclinStatus::Rejected,
    };
    let mut guard = s.lock();
    let inner = &mut *guard;
    let key = (label, phrase.clone());
    let current = inner.lexicon.get(&phrase, label).map(|x| x.status);
    let changed = current != Some(status);
    if changed {
        let before = inner.lexicon.clone();
        let generated = inner.candidates.iter().find(|c| c.label == label && c.phrase == phrase).cloned();
        match &generated {
            Some(c) => inner.lexicon.decide_generated(c, decision, &format!("review-{}", inner.generation))?,
            None => inner.lexicon.decide_candidate(&phrase, label, decision)?,
        };
        persist(inner, before)?;
        *inner.versions.entry(key.clone()).or_insert(0) += 1;
    } else if current == Some(SimclinStatus::Seed) {
        unreachable!("seed status never equals a decision status");
    }
    let version = inner.versions.get(&key).copied().unwrap_or(0);
    Ok(Json(DecisionAck {
        phrase,
        label,
        decision: match decision {
            Decision::Accept => "accepted",
            Decision::Reject => "rejected",
        },
        version,
        changed,
    }))
}

#[derive(Serialize)]
struct RegenerateAck {
    generation: u64,
    count: usize,
    skipped: Vec<SkippedAnchor>,
}

async fn regenerate(State(s): State<Arc<ReviewState>>) -> ApiResult<RegenerateAck> {
    let mut inner = s.lock();
    let batch = inner.lexicon.generate_candidates(&s.model, s.limit_per_seed);
    inner.candidates = batch.candidates;
    inner.skipped = batch.skipped;
    inner.generation += 1;
    Ok(Json(RegenerateAck {
        generation: inner.generation,
        count: inner.candidates.len(),
        skipped: inner.skipped.clone(),
    }))
}

#[derive(Deserialize)]
struct ContextQuery {
    phrase: String,
    limit: Option<usize>,
}

#[derive(Serialize, Debug, PartialEq)]
pub struct Context {
    pub note_id: String,
    /// Byte range of the snippet in the note.
    pub start: usize,
    pub end: usize,
    pub snippet: String,
    /// Byte range of the phrase within `snippet`.
    pub match_start: usize,
    pub match_end: usize,
}

/// Occurrences of the token sequence `phrase` in corpus order, each with up
/// to [`CONTEXT_TOKENS`] tokens on either side.
pub fn find_contexts<'a>(
    notes: impl IntoIterator<Item = (&'a Note, &'a [Token])>,
    phrase: &str,
    limit: usize,
) -> Vec<Context> {
    let normalized = normalize_phrase(phrase);
    let wanted: Vec<&str> = normalized.split('_').filter(|t| !t.is_empty()).collect();
    let mut out = Vec::new();
    if wanted.is_empty() {
        return out;
    }
    for (note, tokens) in notes {
        if tokens.len() < wanted.len() {
            continue;
        }
        for i in 0..=tokens.len() - wanted.len() {
            if out.len() >= limit {
                return out;
            }
            if !wanted.iter().enumerate().all(|(k, w)| tokens[i + k].surface == *w) {
                continue;
            }
            let last = i + wanted.len() - 1;
            let start = tokens[i.saturating_sub(CONTEXT_TOKENS)].start;
            let end = tokens[(last + CONTEXT_TOKENS).min(tokens.len() - 1)].end;
            out.push(Context {
                note_id: note.note_id.clone(),
                start,
                end,
                snippet: note.text[start..end].to_string(),
                match_start: tokens[i].start - start,
                match_end: tokens[last].end - start,
            });
        }
    }
    out
}

#[derive(Serialize)]
struct ContextPage {
    phrase: String,
    contexts: Vec<Context>,
}

async fn contexts(
    State(s): State<Arc<ReviewState>>,
    query: Result<Query<ContextQuery>, QueryRejection>,
) -> ApiResult<ContextPage> {
    let Query(q) = query?;
    let phrase = normalize_phrase(&q.phrase);
    if phrase.is_empty() {
        return Err(LexiconError::EmptyPhrase.into());
    }
    let limit = q.limit.unwrap_or(DEFAULT_CONTEXTS);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::bad_request("invalid-query", format!("limit must be in 1..={MAX_PAGE}")));
    }
    let contexts = find_contexts(s.notes.iter().map(|(n, t)| (n, t.as_slice())), &phrase, limit);
    Ok(Json(ContextPage { phrase, contexts }))
}

async fn negations(State(s): State<Arc<ReviewState>>) -> Json<Vec<NegationTerm>> {
    Json(s.lock().lexicon.negations().cloned().collect())
}

#[derive(Deserialize)]
struct NegationBody {
    phrase: String,
    position: String,
}

impl NegationBody {
    fn position(&self) -> Result<NegationPosition, ApiError> {
        self.position.parse().map_err(|m: String| ApiError::bad_request("invalid-position", m))
    }
}

async fn add_negation(
    State(s): State<Arc<ReviewState>>,
    body: Result<Json<NegationBody>, JsonRejection>,
) -> Result<(StatusCode, Json<Vec<NegationTerm>>), ApiError> {
    let Json(b) = body?;
    let position = b.position()?;
    let mut guard = s.lock();
    let inner = &mut *guard;
    let before = inner.lexicon.clone();
    inner.lexicon.add_negation(&b.phrase, position)?;
    persist(inner, before)?;
    Ok((StatusCode::CREATED, Json(inner.lexicon.negations().cloned().collect())))
}

async fn remove_negation(
    State(s): State<Arc<ReviewState>>,
    body: Result<Json<NegationBody>, JsonRejection>,
) -> ApiResult<Vec<NegationTerm>> {
    let Json(b) = body?;
    let position = b.position()?;
    let mut guard = s.lock();
    let inner = &mut *guard;
    let before = inner.lexicon.clone();
    inner.lexicon.remove_negation(&b.phrase, position)?;
    persist(inner, before)?;
    Ok(Json(inner.lexicon.negations().cloned().collect()))
}
