//! Request payloads and per-session instruction bookkeeping.

use serde::{Deserialize, Serialize};

use super::{LlmConfig, LlmError};
use crate::corpus::Note;
use crate::label::PhenotypeLabel;

/// The phenotyping instructions, shipped unmodified.
pub const INSTRUCTIONS: &str = include_str!("../../resources/box1_instructions.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    /// Conversation key for servers that keep state between turns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
}

impl ChatRequest {
    /// True when the instruction block is part of this request.
    pub fn carries_instructions(&self) -> bool {
        self.messages.iter().any(|m| m.role == "system" && m.content == INSTRUCTIONS)
    }
}

fn format_hint() -> String {
    let names: Vec<&str> = PhenotypeLabel::ALL.iter().map(|l| l.display_name()).collect();
    format!(
        "Answer with exactly {} lines in this order: {}. Write each line as \"<Category>: <findings>\", \
         or \"<Category>: None\" when nothing was found. Do not add any other text.",
        names.len(),
        names.join(", ")
    )
}

/// System messages that open a conversation.
pub fn instructions(config: &LlmConfig) -> Vec<ChatMessage> {
    let mut m = vec![ChatMessage::system(INSTRUCTIONS)];
    if config.format_hint {
        m.push(ChatMessage::system(format_hint()));
    }
    m
}

fn check_note(note: &Note) -> Result<(), LlmError> {
    if note.text.trim().is_empty() {
        Err(LlmError::EmptyNote(note.note_id.clone()))
    } else {
        Ok(())
    }
}

/// A stateless request: instructions followed by the note.
pub fn build_request(note: &Note, config: &LlmConfig) -> Result<ChatRequest, LlmError> {
    check_note(note)?;
    let mut messages = instructions(config);
    messages.push(ChatMessage::user(note.text.clone()));
    Ok(ChatRequest {
        model: config.model.clone(),
        temperature: config.temperature,
        messages,
        session_id: None,
    })
}

/// Tracks whether the server already holds the instructions for a
/// conversation. Without an id every request is built statelessly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Session {
    id: Option<String>,
    primed: bool,
}

impl Session {
    pub fn stateless() -> Self {
        Session::default()
    }

    pub fn new(id: impl Into<String>) -> Self {
        Session { id: Some(id.into()), primed: false }
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn is_primed(&self) -> bool {
        self.primed
    }

    /// The next turn for `note`; carries the instructions until a request
    /// in this session has succeeded.
    pub fn build_request(&self, note: &Note, config: &LlmConfig) -> Result<ChatRequest, LlmError> {
        let mut req = build_request(note, config)?;
        if let Some(id) = &self.id {
            if self.primed {
                req.messages.retain(|m| m.role != "system");
            }
            req.session_id = Some(id.clone());
        }
        Ok(req)
    }

    /// Marks the instructions as delivered.
    pub fn record_success(&mut self) {
        if self.id.is_some() {
            self.primed = true;
        }
    }
}
