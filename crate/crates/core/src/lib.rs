//! Note-level neurological phenotyping.
//!
//! Two pipelines share one evaluation layer:
//!
//! - a hybrid pipeline: word embeddings propose simclins ("similar clinical
//!   terms") that a reviewer accepts or rejects, a token-level matcher finds
//!   them in notes with pre-/post-negation scoping, and a per-label linear SVM
//!   trained from matcher-positive notes makes the final call;
//! - an LLM pipeline: a chat-completion endpoint receives a fixed instruction
//!   block and one note per turn, and its line-oriented answer is parsed into
//!   the same 19-label vector.
//!
//! Both produce [`evaluation::PhenotypeMatrix`] rows that are scored against
//! span annotations with macro-averaged metrics.

pub mod classifier;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod label;
pub mod lexicon;
pub mod llm;
pub mod matcher;

pub use label::{LabelVector, PhenotypeLabel, LABEL_COUNT};
