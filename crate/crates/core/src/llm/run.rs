//! Corpus runs with a worker pool, per-note failure capture, and a JSON-lines
//! audit log that can be re-scored without the endpoint.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{parse_response, ChatRequest, LlmClient, LlmConfig, LlmError, ParsedPhenotype, RateLimiter, Session};
use crate::corpus::Note;
use crate::evaluation::PhenotypeMatrix;
use crate::label::LabelVector;

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub note_id: String,
    pub request: Option<ChatRequest>,
    /// Raw assistant text.
    pub response: Option<String>,
    pub parsed: Option<ParsedPhenotype>,
    pub error: Option<String>,
}

/// Append-only audit writer; each record is written and flushed under a lock.
#[derive(Debug)]
pub struct AuditLog {
    out: Mutex<BufWriter<File>>,
}

impl AuditLog {
    /// Creates or truncates `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Ok(AuditLog { out: Mutex::new(BufWriter::new(File::create(path)?)) })
    }

    /// Appends to `path`, creating it if needed.
    pub fn append(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog { out: Mutex::new(BufWriter::new(f)) })
    }

    pub fn write(&self, record: &AuditRecord) -> Result<(), LlmError> {
        let mut line = serde_json::to_vec(record).map_err(std::io::Error::from)?;
        line.push(b'\n');
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        out.write_all(&line)?;
        out.flush()?;
        Ok(())
    }
}

/// Result for one note. Failed notes carry an all-zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteOutcome {
    pub note_id: String,
    pub labels: LabelVector,
    pub parsed: Option<ParsedPhenotype>,
    pub error: Option<String>,
}

impl NoteOutcome {
    fn from_response(note_id: &str, response: Option<&str>, error: Option<String>) -> Self {
        let (parsed, error) = match (response, error) {
            (_, Some(e)) => (None, Some(e)),
            (Some(r), None) => match parse_response(r) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            },
            (None, None) => (None, Some("no response recorded".to_string())),
        };
        NoteOutcome {
            note_id: note_id.to_string(),
            labels: parsed.as_ref().map(ParsedPhenotype::to_vector).unwrap_or_default(),
            parsed,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlmRun {
    /// In input order.
    pub outcomes: Vec<NoteOutcome>,
}

impl LlmRun {
    pub fn failures(&self) -> impl Iterator<Item = &NoteOutcome> {
        self.outcomes.iter().filter(|o| o.error.is_some())
    }

    pub fn failure_count(&self) -> usize {
        self.failures().count()
    }

    pub fn to_matrix(&self) -> PhenotypeMatrix {
        PhenotypeMatrix::from_rows(self.outcomes.iter().map(|o| (o.note_id.clone(), o.labels)))
            .expect("note ids are unique")
    }
}

fn process(
    note: &Note,
    config: &LlmConfig,
    client: &mut LlmClient<'_>,
    session: &mut Session,
) -> Result<(AuditRecord, NoteOutcome), LlmError> {
    let request = match session.build_request(note, config) {
        Ok(r) => r,
        Err(e) => {
            let msg = e.to_string();
            let outcome = NoteOutcome::from_response(&note.note_id, None, Some(msg.clone()));
            let rec = AuditRecord {
                note_id: note.note_id.clone(),
                request: None,
                response: None,
                parsed: None,
                error: Some(msg),
            };
            return Ok((rec, outcome));
        }
    };
    let (response, error) = match client.call(&request) {
        Ok(c) => {
            session.record_success();
            (Some(c.content), None)
        }
        Err(e) if e.is_fatal() => return Err(e),
        Err(e) => (None, Some(e.to_string())),
    };
    let outcome = NoteOutcome::from_response(&note.note_id, response.as_deref(), error);
    let rec = AuditRecord {
        note_id: note.note_id.clone(),
        request: Some(request),
        response,
        parsed: outcome.parsed.clone(),
        error: outcome.error.clone(),
    };
    Ok((rec, outcome))
}

/// Sends every note on `config.workers` threads, each with its own session.
/// Per-note failures (transport, protocol, parse, empty note) become zero
/// rows with the error recorded; authentication and configuration errors
/// abort the run. Note ids must be unique.
pub fn run_corpus(notes: &[Note], config: &LlmConfig, audit: Option<&AuditLog>) -> Result<LlmRun, LlmError> {
    config.validate()?;
    // surfaces a missing token before any worker starts
    LlmClient::new(config)?;
    let limiter = config.requests_per_minute.map(RateLimiter::per_minute);
    let workers = config.workers.min(notes.len()).max(1);
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let fatal: Mutex<Option<LlmError>> = Mutex::new(None);
    let slots: Vec<Mutex<Option<NoteOutcome>>> = notes.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for k in 0..workers {
            let (next, abort, fatal, slots, limiter) = (&next, &abort, &fatal, &slots, limiter.as_ref());
            scope.spawn(move || {
                let fail = |e: LlmError| {
                    abort.store(true, Ordering::SeqCst);
                    fatal.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
                };
                let mut client = match LlmClient::with_stream(config, k as u64 + 1, limiter) {
                    Ok(c) => c,
                    Err(e) => return fail(e),
                };
                let mut session = if config.sessions {
                    Session::new(format!("pheno-{:016x}-{k}", config.seed))
                } else {
                    Session::stateless()
                };
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= notes.len() || abort.load(Ordering::SeqCst) {
                        break;
                    }
                    match process(&notes[i], config, &mut client, &mut session) {
                        Ok((rec, outcome)) => {
                            if let Some(err) = &outcome.error {
                                log::warn!("note {}: {err}", outcome.note_id);
                            }
                            if let Some(a) = audit {
                                if let Err(e) = a.write(&rec) {
                                    return fail(e);
                                }
                            }
                            *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(outcome);
                        }
                        Err(e) => return fail(e),
                    }
                }
            });
        }
    });

    if let Some(e) = fatal.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    let outcomes = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every note processed"))
        .collect();
    Ok(LlmRun { outcomes })
}

pub fn read_audit(path: impl AsRef<Path>) -> Result<Vec<AuditRecord>, LlmError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AuditRecord = serde_json::from_str(&line)
            .map_err(|e| LlmError::Audit { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

/// Re-parses every recorded response. Notes appear in first-seen order; when
/// a note was logged more than once the last record wins.
pub fn rescore_audit(records: &[AuditRecord]) -> LlmRun {
    let mut order: Vec<&str> = Vec::new();
    let mut latest: std::collections::HashMap<&str, &AuditRecord> = std::collections::HashMap::new();
    for r in records {
        if latest.insert(&r.note_id, r).is_none() {
            order.push(&r.note_id);
        }
    }
    let outcomes = order
        .into_iter()
        .map(|id| {
            let r = latest[id];
            NoteOutcome::from_response(id, r.response.as_deref(), r.error.clone().filter(|_| r.response.is_none()))
        })
        .collect();
    LlmRun { outcomes }
}
