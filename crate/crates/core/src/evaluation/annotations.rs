//! Span annotations in the JSON-lines export of a span-labelling tool.
//!
//! Each line holds one displayed chunk of a note:
//! `{"text": ..., "spans": [{"start", "end", "label"}], "meta": {"note_id": ...}}`.
//! Several lines may belong to the same note. Offsets are byte offsets into
//! that line's `text`. Lines whose `answer` is `reject` or `ignore` keep
//! their note in the note list but contribute no spans.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;

use super::{EvalError, PhenotypeMatrix};
use crate::label::PhenotypeLabel;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpanAnnotation {
    pub note_id: String,
    pub start: usize,
    pub end: usize,
    pub label: PhenotypeLabel,
    /// Covered text of the annotated line.
    pub text: String,
}

/// Spans plus the notes they were read from, in first-seen order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub note_ids: Vec<String>,
    pub spans: Vec<SpanAnnotation>,
}

impl AnnotationSet {
    pub fn to_matrix(&self) -> Result<PhenotypeMatrix, EvalError> {
        spans_to_matrix(&self.spans, &self.note_ids)
    }
}

#[derive(Deserialize)]
struct Line {
    text: String,
    #[serde(default)]
    spans: Vec<RawSpan>,
    meta: Meta,
    #[serde(default)]
    answer: Option<String>,
}

#[derive(Deserialize)]
struct RawSpan {
    start: usize,
    end: usize,
    label: String,
}

#[derive(Deserialize)]
struct Meta {
    note_id: NoteId,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NoteId {
    Text(String),
    Int(i64),
    Uint(u64),
}

impl NoteId {
    fn into_string(self) -> String {
        match self {
            NoteId::Text(s) => s,
            NoteId::Int(i) => i.to_string(),
            NoteId::Uint(u) => u.to_string(),
        }
    }
}

pub fn parse_annotations<R: Read>(r: R) -> Result<AnnotationSet, EvalError> {
    let mut set = AnnotationSet::default();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Annotation { line: line_no, message };
        let parsed: Line = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let note_id = parsed.meta.note_id.into_string();
        if note_id.is_empty() {
            return Err(err("empty meta.note_id".into()));
        }
        if seen.insert(note_id.clone()) {
            set.note_ids.push(note_id.clone());
        }
        if matches!(parsed.answer.as_deref(), Some("reject" | "ignore")) {
            continue;
        }
        for s in parsed.spans {
            let label: PhenotypeLabel = s.label.parse().map_err(|_| err(format!("unknown label {:?}", s.label)))?;
            if s.start >= s.end || s.end > parsed.text.len() {
                return Err(err(format!(
                    "span [{}, {}) out of range for text of {} bytes",
                    s.start,
                    s.end,
                    parsed.text.len()
                )));
            }
            let text = parsed
                .text
                .get(s.start..s.end)
                .ok_or_else(|| err(format!("span [{}, {}) splits a UTF-8 character", s.start, s.end)))?;
            set.spans.push(SpanAnnotation {
                note_id: note_id.clone(),
                start: s.start,
                end: s.end,
                label,
                text: text.to_string(),
            });
        }
    }
    Ok(set)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet, EvalError> {
    parse_annotations(std::fs::File::open(path)?)
}

/// Cell (n, l) is 1 iff some span in note n carries label l.
pub fn spans_to_matrix(spans: &[SpanAnnotation], note_ids: &[String]) -> Result<PhenotypeMatrix, EvalError> {
    let mut m = PhenotypeMatrix::zeros(note_ids.iter().cloned())?;
    let pos: std::collections::HashMap<&str, usize> =
        note_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    for s in spans {
        let &row = pos
            .get(s.note_id.as_str())
            .ok_or_else(|| EvalError::OrphanNote(s.note_id.clone()))?;
        m.row_mut(row).set(s.label, true);
    }
    Ok(m)
}
