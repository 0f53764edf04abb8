//! Seed terms, reviewed simclin candidates and negation term lists.
//!
//! A [`Lexicon`] holds at most one [`Simclin`] per `(phrase, label)`. Seeds
//! are immutable once added; rejected phrases stay as tombstones so a reviewer
//! never sees the same candidate twice. Accepted simclins act as expansion
//! anchors alongside the seeds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::tokenize;
use crate::embedding::EmbeddingModel;
pub use crate::label::{LabelVector, PhenotypeLabel, UnknownLabel, LABEL_COUNT};

pub const DEFAULT_THRESHOLD: f64 = 0.6;

const DEFAULT_LEXICON: &str = include_str!("../resources/default_lexicon.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("phrase is empty after normalization")]
    EmptyPhrase,
    #[error("{phrase:?} is rejected for {label}; un-reject it before adding it as a seed")]
    RejectedConflict { phrase: String, label: PhenotypeLabel },
    #[error("{phrase:?} is a seed for {label}; seeds cannot be decided")]
    SeedImmutable { phrase: String, label: PhenotypeLabel },
    #[error("{phrase:?} is not rejected for {label}")]
    NotRejected { phrase: String, label: PhenotypeLabel },
    #[error("negation ({phrase:?}, {position}) already present")]
    DuplicateNegation { phrase: String, position: NegationPosition },
    #[error("negation ({phrase:?}, {position}) not found")]
    UnknownNegation { phrase: String, position: NegationPosition },
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("lexicon parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("lexicon schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimclinStatus {
    Seed,
    Accepted,
    Rejected,
}

impl SimclinStatus {
    /// Seeds and accepted simclins are matched in notes.
    pub fn is_active(self) -> bool {
        matches!(self, SimclinStatus::Seed | SimclinStatus::Accepted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simclin {
    pub phrase: String,
    pub label: PhenotypeLabel,
    pub similarity: Option<f64>,
    pub status: SimclinStatus,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegationPosition {
    Pre,
    Post,
}

impl fmt::Display for NegationPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegationPosition::Pre => "pre",
            NegationPosition::Post => "post",
        })
    }
}

impl FromStr for NegationPosition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "pre" => Ok(NegationPosition::Pre),
            "post" => Ok(NegationPosition::Post),
            other => Err(format!("unknown negation position {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NegationTerm {
    pub phrase: String,
    pub position: NegationPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl FromStr for Decision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "accept" | "accepted" => Ok(Decision::Accept),
            "reject" | "rejected" => Ok(Decision::Reject),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

/// An embedding neighbor proposed for human review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub phrase: String,
    pub label: PhenotypeLabel,
    pub similarity: f64,
    pub nearest_seed: String,
}

/// Anchor that could not be expanded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedAnchor {
    pub phrase: String,
    pub label: PhenotypeLabel,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateBatch {
    pub candidates: Vec<Candidate>,
    pub skipped: Vec<SkippedAnchor>,
}

/// Lowercased token surfaces joined by `_` (the simclin key form).
pub fn normalize_phrase(phrase: &str) -> String {
    tokenize(phrase)
        .into_iter()
        .map(|t| t.surface)
        .collect::<Vec<_>>()
        .join("_")
}

/// Lowercased token surfaces joined by single spaces.
pub fn normalize_negation(phrase: &str) -> String {
    tokenize(phrase)
        .into_iter()
        .map(|t| t.surface)
        .collect::<Vec<_>>()
        .join(" ")
}

/// On-disk JSON document.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    threshold: f64,
    simclins: Vec<Simclin>,
    negations: Vec<NegationTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    threshold: f64,
    simclins: BTreeMap<(PhenotypeLabel, String), Simclin>,
    negations: BTreeSet<NegationTerm>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new(DEFAULT_THRESHOLD).expect("default threshold is valid")
    }
}

impl Lexicon {
    /// Empty lexicon: no simclins, no negations.
    pub fn new(threshold: f64) -> Result<Self, LexiconError> {
        check_threshold(threshold)?;
        Ok(Lexicon {
            threshold,
            simclins: BTreeMap::new(),
            negations: BTreeSet::new(),
        })
    }

    /// The shipped starting lexicon: thirteen seeds and the default pre/post
    /// negation lists.
    pub fn default_seeds() -> Self {
        Lexicon::from_json(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    /// Adds the default negation terms (idempotent).
    pub fn with_default_negations(mut self) -> Self {
        for n in Lexicon::default_seeds().negations {
            self.negations.insert(n);
        }
        self
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<(), LexiconError> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(())
    }

    pub fn simclins(&self) -> impl Iterator<Item = &Simclin> {
        self.simclins.values()
    }

    pub fn active_simclins(&self) -> impl Iterator<Item = &Simclin> {
        self.simclins.values().filter(|s| s.status.is_active())
    }

    pub fn get(&self, phrase: &str, label: PhenotypeLabel) -> Option<&Simclin> {
        self.simclins.get(&(label, normalize_phrase(phrase)))
    }

    pub fn len(&self) -> usize {
        self.simclins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simclins.is_empty()
    }

    pub fn negations(&self) -> impl Iterator<Item = &NegationTerm> {
        self.negations.iter()
    }

    pub fn negations_at(&self, position: NegationPosition) -> impl Iterator<Item = &str> {
        self.negations
            .iter()
            .filter(move |n| n.position == position)
            .map(|n| n.phrase.as_str())
    }

    /// Adds a seed. Re-adding an existing seed is a no-op; an accepted
    /// simclin is promoted to seed.
    pub fn add_seed(&mut self, phrase: &str, label: PhenotypeLabel) -> Result<(), LexiconError> {
        self.add_seed_from(phrase, label, "user")
    }

    pub fn add_seed_from(
        &mut self,
        phrase: &str,
        label: PhenotypeLabel,
        provenance: &str,
    ) -> Result<(), LexiconError> {
        let phrase = normalize_phrase(phrase);
        if phrase.is_empty() {
            return Err(LexiconError::EmptyPhrase);
        }
        match self.simclins.get(&(label, phrase.clone())) {
            Some(s) if s.status == SimclinStatus::Seed => Ok(()),
            Some(s) if s.status == SimclinStatus::Rejected => {
                Err(LexiconError::RejectedConflict { phrase, label })
            }
            _ => {
                self.simclins.insert(
                    (label, phrase.clone()),
                    Simclin {
                        phrase,
                        label,
                        similarity: None,
                        status: SimclinStatus::Seed,
                        provenance: provenance.to_string(),
                    },
                );
                Ok(())
            }
        }
    }

    /// Records a review decision for any phrase, known or not.
    pub fn decide_candidate(
        &mut self,
        phrase: &str,
        label: PhenotypeLabel,
        decision: Decision,
    ) -> Result<&Simclin, LexiconError> {
        self.decide_with(phrase, label, decision, None, "review")
    }

    /// Records a decision on a generated candidate, keeping its similarity.
    pub fn decide_generated(
        &mut self,
        candidate: &Candidate,
        decision: Decision,
        batch_id: &str,
    ) -> Result<&Simclin, LexiconError> {
        self.decide_with(
            &candidate.phrase,
            candidate.label,
            decision,
            Some(candidate.similarity),
            batch_id,
        )
    }

    fn decide_with(
        &mut self,
        phrase: &str,
        label: PhenotypeLabel,
        decision: Decision,
        similarity: Option<f64>,
        provenance: &str,
    ) -> Result<&Simclin, LexiconError> {
        let phrase = normalize_phrase(phrase);
        if phrase.is_empty() {
            return Err(LexiconError::EmptyPhrase);
        }
        let status = match decision {
            Decision::Accept => SimclinStatus::Accepted,
            Decision::Reject => SimclinStatus::Rejected,
        };
        let key = (label, phrase.clone());
        if let Some(existing) = self.simclins.get(&key) {
            if existing.status == SimclinStatus::Seed {
                return Err(LexiconError::SeedImmutable { phrase, label });
            }
        }
        let entry = self.simclins.entry(key).or_insert_with(|| Simclin {
            phrase,
            label,
            similarity,
            status,
            provenance: provenance.to_string(),
        });
        entry.status = status;
        if similarity.is_some() {
            entry.similarity = similarity;
        }
        Ok(entry)
    }

    /// Removes a rejection tombstone so the phrase can be proposed or seeded again.
    pub fn unreject(&mut self, phrase: &str, label: PhenotypeLabel) -> Result<(), LexiconError> {
        let phrase = normalize_phrase(phrase);
        let key = (label, phrase.clone());
        match self.simclins.get(&key) {
            Some(s) if s.status == SimclinStatus::Rejected => {
                self.simclins.remove(&key);
                Ok(())
            }
            _ => Err(LexiconError::NotRejected { phrase, label }),
        }
    }

    pub fn add_negation(
        &mut self,
        phrase: &str,
        position: NegationPosition,
    ) -> Result<(), LexiconError> {
        let phrase = normalize_negation(phrase);
        if phrase.is_empty() {
            return Err(LexiconError::EmptyPhrase);
        }
        let term = NegationTerm { phrase, position };
        if self.negations.contains(&term) {
            return Err(LexiconError::DuplicateNegation {
                phrase: term.phrase,
                position,
            });
        }
        self.negations.insert(term);
        Ok(())
    }

    pub fn remove_negation(
        &mut self,
        phrase: &str,
        position: NegationPosition,
    ) -> Result<(), LexiconError> {
        let term = NegationTerm {
            phrase: normalize_negation(phrase),
            position,
        };
        if self.negations.remove(&term) {
            Ok(())
        } else {
            Err(LexiconError::UnknownNegation {
                phrase: term.phrase,
                position,
            })
        }
    }

    /// Proposes vocabulary tokens near any seed or accepted simclin.
    ///
    /// For every anchor, up to `limit_per_seed` neighbors at similarity >=
    /// the lexicon threshold are collected. Phrases that already carry any
    /// status for the anchor's label are dropped, duplicates keep their best
    /// similarity, and the result is sorted by similarity descending (then
    /// label order, then phrase). Anchors missing from the model are
    /// reported in [`CandidateBatch::skipped`].
    pub fn generate_candidates(&self, model: &EmbeddingModel, limit_per_seed: usize) -> CandidateBatch {
        let mut best: HashMap<(PhenotypeLabel, String), Candidate> = HashMap::new();
        let mut skipped = Vec::new();
        for anchor in self.active_simclins() {
            // neighbors are filtered after the limit is applied, so ask for
            // enough to cover phrases already in the lexicon
            let known = self.simclins.keys().filter(|(l, _)| *l == anchor.label).count();
            let neighbors = match model.neighbors(
                &anchor.phrase,
                self.threshold,
                limit_per_seed.saturating_add(known),
            ) {
                Ok(n) => n,
                Err(e) => {
                    log::warn!("anchor {:?} ({}) skipped: {e}", anchor.phrase, anchor.label);
                    skipped.push(SkippedAnchor {
                        phrase: anchor.phrase.clone(),
                        label: anchor.label,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let fresh = neighbors
                .into_iter()
                .filter(|(p, _)| !self.simclins.contains_key(&(anchor.label, p.clone())))
                .take(limit_per_seed);
            for (phrase, similarity) in fresh {
                let key = (anchor.label, phrase.clone());
                let candidate = Candidate {
                    phrase,
                    label: anchor.label,
                    similarity,
                    nearest_seed: anchor.phrase.clone(),
                };
                match best.get(&key) {
                    Some(prev)
                        if prev.similarity > similarity
                            || (prev.similarity == similarity
                                && prev.nearest_seed <= candidate.nearest_seed) => {}
                    _ => {
                        best.insert(key, candidate);
                    }
                }
            }
        }
        let mut candidates: Vec<Candidate> = best.into_values().collect();
        candidates.sort_by(|a, b| {
            b.similarity
                .total_cmp(&a.similarity)
                .then_with(|| a.label.cmp(&b.label))
                .then_with(|| a.phrase.cmp(&b.phrase))
        });
        CandidateBatch { candidates, skipped }
    }

    pub fn to_json(&self) -> String {
        let file = LexiconFile {
            threshold: self.threshold,
            simclins: self.simclins.values().cloned().collect(),
            negations: self.negations.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("lexicon serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(text).map_err(|e| LexiconError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        check_threshold(file.threshold)?;
        let mut lex = Lexicon::new(file.threshold)?;
        for (i, s) in file.simclins.into_iter().enumerate() {
            let normalized = normalize_phrase(&s.phrase);
            if normalized.is_empty() {
                return Err(LexiconError::Schema(format!("simclins[{i}]: empty phrase")));
            }
            if normalized != s.phrase {
                return Err(LexiconError::Schema(format!(
                    "simclins[{i}]: phrase {:?} is not normalized (expected {normalized:?})",
                    s.phrase
                )));
            }
            if let Some(sim) = s.similarity {
                if !(-1.0..=1.0).contains(&sim) {
                    return Err(LexiconError::Schema(format!(
                        "simclins[{i}]: similarity {sim} outside [-1, 1]"
                    )));
                }
            }
            let key = (s.label, s.phrase.clone());
            if lex.simclins.insert(key, s.clone()).is_some() {
                return Err(LexiconError::Schema(format!(
                    "simclins[{i}]: duplicate ({:?}, {})",
                    s.phrase, s.label
                )));
            }
        }
        for (i, n) in file.negations.into_iter().enumerate() {
            if normalize_negation(&n.phrase).is_empty() {
                return Err(LexiconError::Schema(format!("negations[{i}]: empty phrase")));
            }
            let desc = format!("negations[{i}]: duplicate ({:?}, {})", n.phrase, n.position);
            if !lex.negations.insert(n) {
                return Err(LexiconError::Schema(desc));
            }
        }
        Ok(lex)
    }

    /// Writes the JSON document atomically (temporary file, fsync, rename).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LexiconError> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

fn check_threshold(t: f64) -> Result<(), LexiconError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(LexiconError::InvalidThreshold(t))
    }
}

/// Replaces `path` with `bytes` so readers see either the old or the new file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    if let Ok(d) = std::fs::File::open(&dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use PhenotypeLabel::*;

    #[test]
    fn seed_add_is_idempotent() {
        let mut lex = Lexicon::default();
        lex.add_seed("gait instability", Gait).unwrap();
        let snapshot = lex.clone();
        lex.add_seed("Gait  Instability", Gait).unwrap();
        assert_eq!(lex, snapshot);
        let s = lex.get("gait_instability", Gait).unwrap();
        assert_eq!(s.status, SimclinStatus::Seed);
        assert_eq!(s.similarity, None);
    }

    #[test]
    fn empty_seed_rejected() {
        let mut lex = Lexicon::default();
        assert!(matches!(lex.add_seed("", Gait), Err(LexiconError::EmptyPhrase)));
        assert!(matches!(lex.add_seed(" ,. ", Gait), Err(LexiconError::EmptyPhrase)));
    }

    #[test]
    fn rejected_phrase_blocks_seed_until_unrejected() {
        let mut lex = Lexicon::default();
        lex.decide_candidate("falls", Gait, Decision::Reject).unwrap();
        assert!(matches!(
            lex.add_seed("falls", Gait),
            Err(LexiconError::RejectedConflict { .. })
        ));
        // other labels are unaffected
        lex.add_seed("falls", Weakness).unwrap();
        lex.unreject("falls", Gait).unwrap();
        lex.add_seed("falls", Gait).unwrap();
        assert!(lex.unreject("falls", Gait).is_err());
    }

    #[test]
    fn seeds_cannot_be_decided() {
        let mut lex = Lexicon::default();
        lex.add_seed("double vision", Eom).unwrap();
        assert!(matches!(
            lex.decide_candidate("double vision", Eom, Decision::Reject),
            Err(LexiconError::SeedImmutable { .. })
        ));
        assert_eq!(lex.get("double_vision", Eom).unwrap().status, SimclinStatus::Seed);
    }

    #[test]
    fn accept_then_reject_updates_status() {
        let mut lex = Lexicon::default();
        lex.decide_candidate("imbalance", Gait, Decision::Accept).unwrap();
        assert_eq!(lex.get("imbalance", Gait).unwrap().status, SimclinStatus::Accepted);
        assert_eq!(lex.active_simclins().count(), 1);
        lex.decide_candidate("imbalance", Gait, Decision::Reject).unwrap();
        assert_eq!(lex.active_simclins().count(), 0);
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn accepted_promoted_to_seed() {
        let mut lex = Lexicon::default();
        lex.decide_candidate("imbalance", Gait, Decision::Accept).unwrap();
        lex.add_seed("imbalance", Gait).unwrap();
        assert_eq!(lex.get("imbalance", Gait).unwrap().status, SimclinStatus::Seed);
    }

    #[test]
    fn negations_unique() {
        let mut lex = Lexicon::default();
        lex.add_negation("No sign of", NegationPosition::Pre).unwrap();
        assert!(matches!(
            lex.add_negation("no  sign of", NegationPosition::Pre),
            Err(LexiconError::DuplicateNegation { .. })
        ));
        lex.add_negation("no sign of", NegationPosition::Post).unwrap();
        assert_eq!(lex.negations_at(NegationPosition::Pre).collect::<Vec<_>>(), ["no sign of"]);
        lex.remove_negation("no sign of", NegationPosition::Post).unwrap();
        assert!(lex.remove_negation("no sign of", NegationPosition::Post).is_err());
    }

    #[test]
    fn round_trip_three_simclins() {
        let mut lex = Lexicon::new(0.65).unwrap();
        lex.add_seed("gait instability", Gait).unwrap();
        let c = Candidate {
            phrase: "imbalance".into(),
            label: Gait,
            similarity: 0.1 + 0.6,
            nearest_seed: "gait_instability".into(),
        };
        lex.decide_generated(&c, Decision::Accept, "batch-1").unwrap();
        lex.decide_candidate("cane", Gait, Decision::Reject).unwrap();
        lex.add_negation("denies", NegationPosition::Pre).unwrap();
        let back = Lexicon::from_json(&lex.to_json()).unwrap();
        assert_eq!(back, lex);
        assert_eq!(back.get("imbalance", Gait).unwrap().similarity, Some(0.1 + 0.6));
    }

    #[test]
    fn missing_threshold_is_parse_error() {
        let text = r#"{"simclins": [], "negations": []}"#;
        let err = Lexicon::from_json(text).unwrap_err();
        assert!(matches!(err, LexiconError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("threshold"));
    }

    #[test]
    fn unknown_label_is_error_with_position() {
        let text = "{\"threshold\": 0.6,\n \"simclins\": [{\"phrase\": \"x\", \"label\": \"reflexes\", \"similarity\": null, \"status\": \"seed\", \"provenance\": \"\"}],\n \"negations\": []}";
        let err = Lexicon::from_json(text).unwrap_err();
        match err {
            LexiconError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_simclin_is_schema_error() {
        let entry = r#"{"phrase": "x", "label": "gait", "similarity": null, "status": "seed", "provenance": ""}"#;
        let text = format!(r#"{{"threshold": 0.6, "simclins": [{entry}, {entry}], "negations": []}}"#);
        assert!(matches!(Lexicon::from_json(&text), Err(LexiconError::Schema(_))));
    }

    #[test]
    fn bad_threshold() {
        assert!(Lexicon::new(0.0).is_err());
        assert!(Lexicon::new(1.0).is_ok());
        let text = r#"{"threshold": 1.5, "simclins": [], "negations": []}"#;
        assert!(matches!(Lexicon::from_json(text), Err(LexiconError::InvalidThreshold(_))));
    }

    #[test]
    fn shipped_seeds() {
        let lex = Lexicon::default_seeds();
        assert_eq!(lex.simclins().filter(|s| s.status == SimclinStatus::Seed).count(), 13);
        assert_eq!(lex.threshold(), 0.6);
        let labels: BTreeSet<_> = lex.simclins().map(|s| s.label).collect();
        assert_eq!(labels.len(), 13);
        assert!(lex.get("gait instability", Gait).is_some());
        assert!(lex.get("Numbness or tingling +", Paresthesias).is_some());
        assert_eq!(lex.negations_at(NegationPosition::Pre).count(), 4);
        assert_eq!(lex.negations_at(NegationPosition::Post).count(), 2);
    }

    #[test]
    fn save_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.json");
        let lex = Lexicon::default_seeds();
        lex.save(&path).unwrap();
        assert_eq!(Lexicon::load(&path).unwrap(), lex);
        let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
