//! Note ingestion, tokenization with byte offsets, and sentence splitting.
//!
//! Tokens are runs of alphanumeric characters or runs of `+` (reflex grading
//! such as `biceps +++`). Everything else separates tokens. Lowercasing is
//! the only normalization applied.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("column {0:?} not found in CSV header")]
    MissingColumn(String),
    #[error("duplicate note_id {0:?}")]
    DuplicateId(String),
    #[error("row {row}: empty note_id")]
    EmptyId { row: usize },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One physician note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub note_id: String,
    pub text: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Note {
    pub fn new(note_id: impl Into<String>, text: impl Into<String>) -> Self {
        Note {
            note_id: note_id.into(),
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }

    /// Tokens with sentence indices assigned.
    pub fn tokens(&self) -> Vec<Token> {
        analyze(&self.text)
    }
}

/// A lowercased token with byte offsets into its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub sentence_index: usize,
}

/// A data row skipped during ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowWarning {
    /// 1-based data row number (header excluded).
    pub row: usize,
    pub note_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub notes: Vec<Note>,
    pub warnings: Vec<RowWarning>,
}

/// Reads notes from a headed CSV file. Columns other than `id_column` and
/// `text_column` are kept in [`Note::meta`].
pub fn ingest_csv(
    path: impl AsRef<Path>,
    id_column: &str,
    text_column: &str,
) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(file, id_column, text_column)
}

pub fn ingest_reader<R: std::io::Read>(
    reader: R,
    id_column: &str,
    text_column: &str,
) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let id_idx = find(id_column)?;
    let text_idx = find(text_column)?;

    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let note_id = record.get(id_idx).unwrap_or("").to_string();
        if note_id.is_empty() {
            return Err(CorpusError::EmptyId { row });
        }
        let text = record.get(text_idx).unwrap_or("").to_string();
        if text.trim().is_empty() {
            log::warn!("row {row}: note {note_id:?} has empty text, skipped");
            corpus.warnings.push(RowWarning {
                row,
                note_id,
                message: "empty text".to_string(),
            });
            continue;
        }
        if !seen.insert(note_id.clone()) {
            return Err(CorpusError::DuplicateId(note_id));
        }
        let meta = headers
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(j, _)| *j != id_idx && *j != text_idx)
            .map(|(_, (h, v))| (h.to_string(), v.to_string()))
            .collect();
        corpus.notes.push(Note { note_id, text, meta });
    }
    Ok(corpus)
}

/// Writes notes as CSV with `note_id,text` followed by the union of meta keys.
pub fn write_csv<W: std::io::Write>(notes: &[Note], writer: W) -> Result<(), CorpusError> {
    let mut keys: Vec<&str> = notes
        .iter()
        .flat_map(|n| n.meta.keys().map(String::as_str))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["note_id", "text"];
    header.extend(keys.iter().copied());
    w.write_record(&header)?;
    for n in notes {
        let mut row = vec![n.note_id.as_str(), n.text.as_str()];
        row.extend(keys.iter().map(|k| n.meta.get(*k).map(String::as_str).unwrap_or("")));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| CorpusError::Io {
        path: "<csv writer>".to_string(),
        source,
    })?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Plus,
    Sep,
}

fn classify(c: char) -> Class {
    if c.is_alphanumeric() {
        Class::Word
    } else if c == '+' {
        Class::Plus
    } else {
        Class::Sep
    }
}

/// Splits `text` into lowercased tokens. All tokens carry `sentence_index` 0;
/// see [`split_sentences`].
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(Class, usize)> = None;
    for (pos, c) in text.char_indices() {
        let class = classify(c);
        match current {
            Some((cls, _)) if cls == class => {}
            Some((_, start)) => {
                push_token(&mut tokens, text, start, pos);
                current = (class != Class::Sep).then_some((class, pos));
            }
            None => {
                current = (class != Class::Sep).then_some((class, pos));
            }
        }
    }
    if let Some((_, start)) = current {
        push_token(&mut tokens, text, start, text.len());
    }
    tokens
}

fn push_token(tokens: &mut Vec<Token>, text: &str, start: usize, end: usize) {
    tokens.push(Token {
        surface: text[start..end].to_lowercase(),
        start,
        end,
        sentence_index: 0,
    });
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n')
}

/// Assigns sentence indices: the index advances by one whenever the text
/// between two consecutive tokens contains `.`, `!`, `?` or a newline.
pub fn split_sentences(mut tokens: Vec<Token>, text: &str) -> Vec<Token> {
    let mut sentence = 0;
    let mut prev_end: Option<usize> = None;
    for tok in tokens.iter_mut() {
        if let Some(end) = prev_end {
            if text[end..tok.start].chars().any(is_terminator) {
                sentence += 1;
            }
        }
        tok.sentence_index = sentence;
        prev_end = Some(tok.end);
    }
    tokens
}

/// [`tokenize`] followed by [`split_sentences`].
pub fn analyze(text: &str) -> Vec<Token> {
    split_sentences(tokenize(text), text)
}

/// Token surfaces only.
pub fn surfaces(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| t.surface.clone()).collect()
}
