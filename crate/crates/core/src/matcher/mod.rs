//! Simclin matching, negation scoping, and note-level label vectors.
//!
//! Matching is token-aligned: a simclin `right_sided_weakness` matches the
//! token sequence `right sided weakness`, never a substring of a token.
//! Overlapping matches of the same label are resolved longest first, then
//! leftmost. Negation terms are sentence-bounded and windowed in tokens.

mod automaton;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Note, Token};
use crate::label::{LabelVector, PhenotypeLabel};
use crate::lexicon::{Lexicon, NegationPosition};

pub use automaton::{Occurrence, TokenAutomaton};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("negation windows must be >= 1 (pre {pre}, post {post})")]
    InvalidWindow { pre: usize, post: usize },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub note_id: String,
    pub label: PhenotypeLabel,
    pub phrase: String,
    /// Byte offsets into the note text.
    pub start: usize,
    pub end: usize,
    pub negated: bool,
    /// Token range `[first_token, end_token)` within the note.
    #[serde(skip)]
    pub first_token: usize,
    #[serde(skip)]
    pub end_token: usize,
}

/// Token windows for negation scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NegationConfig {
    /// A pre-negation must end within this many tokens before the match.
    pub pre_window: usize,
    /// A post-negation must begin within this many tokens after the match.
    pub post_window: usize,
}

impl Default for NegationConfig {
    fn default() -> Self {
        NegationConfig {
            pre_window: 5,
            post_window: 3,
        }
    }
}

impl NegationConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if self.pre_window == 0 || self.post_window == 0 {
            Err(MatchError::InvalidWindow {
                pre: self.pre_window,
                post: self.post_window,
            })
        } else {
            Ok(())
        }
    }
}

/// A lexicon snapshot compiled for matching. Immutable and shareable
/// across threads.
#[derive(Debug, Clone)]
pub struct Matcher {
    simclins: TokenAutomaton,
    /// (label, phrase) per simclin pattern id.
    targets: Vec<(PhenotypeLabel, String)>,
    pre: TokenAutomaton,
    post: TokenAutomaton,
}

fn phrase_tokens(phrase: &str, sep: char) -> Vec<String> {
    phrase
        .split(sep)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

impl Matcher {
    /// Compiles the seed and accepted simclins plus the negation lists.
    pub fn new(lexicon: &Lexicon) -> Self {
        let targets: Vec<(PhenotypeLabel, String)> = lexicon
            .active_simclins()
            .map(|s| (s.label, s.phrase.clone()))
            .collect();
        let simclins = TokenAutomaton::new(targets.iter().map(|(_, p)| phrase_tokens(p, '_')));
        let neg = |pos| {
            TokenAutomaton::new(
                lexicon
                    .negations_at(pos)
                    .map(|p| phrase_tokens(p, ' '))
                    .collect::<Vec<_>>(),
            )
        };
        Matcher {
            simclins,
            targets,
            pre: neg(NegationPosition::Pre),
            post: neg(NegationPosition::Post),
        }
    }

    /// Number of simclin patterns.
    pub fn pattern_count(&self) -> usize {
        self.targets.len()
    }

    /// Non-overlapping (per label) simclin matches in text order, all with
    /// `negated = false`.
    pub fn find_matches(&self, note_id: &str, tokens: &[Token]) -> Vec<Match> {
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        let mut occ = self.simclins.find_all(&surfaces);
        resolve_overlaps(&mut occ, |p| self.targets[p].0);
        occ.into_iter()
            .map(|o| {
                let (label, phrase) = &self.targets[o.pattern];
                Match {
                    note_id: note_id.to_string(),
                    label: *label,
                    phrase: phrase.clone(),
                    start: tokens[o.start].start,
                    end: tokens[o.end - 1].end,
                    negated: false,
                    first_token: o.start,
                    end_token: o.end,
                }
            })
            .collect()
    }

    /// Sets `negated` on every match covered by a pre- or post-negation in
    /// the same sentence. Offsets and labels are left untouched.
    pub fn apply_negation(&self, matches: &mut [Match], tokens: &[Token], config: &NegationConfig) {
        if matches.is_empty() {
            return;
        }
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        let sentence = |i: usize| tokens[i].sentence_index;

        // pre-negations indexed by their (exclusive) end token
        let mut pre_ends: Vec<(usize, usize)> = self
            .pre
            .find_all(&surfaces)
            .into_iter()
            .map(|o| (o.end, o.start))
            .collect();
        pre_ends.sort_unstable();
        let mut post_starts: Vec<(usize, usize)> = self
            .post
            .find_all(&surfaces)
            .into_iter()
            .map(|o| (o.start, o.end))
            .collect();
        post_starts.sort_unstable();

        for m in matches.iter_mut() {
            let (ms, me) = (m.first_token, m.end_token);
            // pre: end in [ms - pre_window + 1, ms], same sentence as the match start
            let lo = (ms + 1).saturating_sub(config.pre_window);
            let from = pre_ends.partition_point(|&(e, _)| e < lo);
            let pre_hit = pre_ends[from..]
                .iter()
                .take_while(|&&(e, _)| e <= ms)
                .any(|&(_, s)| sentence(s) == sentence(ms));
            // post: start in [me, me + post_window - 1], same sentence as the match end
            let hi = me + config.post_window;
            let from = post_starts.partition_point(|&(s, _)| s < me);
            let post_hit = post_starts[from..]
                .iter()
                .take_while(|&&(s, _)| s < hi)
                .any(|&(_, e)| sentence(e - 1) == sentence(me - 1));
            m.negated = pre_hit || post_hit;
        }
    }

    /// Matches with negation applied.
    pub fn analyze(&self, note_id: &str, tokens: &[Token], config: &NegationConfig) -> Vec<Match> {
        let mut m = self.find_matches(note_id, tokens);
        self.apply_negation(&mut m, tokens, config);
        m
    }
}

/// Keeps, per label, the longest occurrence first and then the leftmost,
/// dropping any occurrence overlapping one already kept. Output is in text
/// order (start, end, pattern).
fn resolve_overlaps(occ: &mut Vec<Occurrence>, label_of: impl Fn(usize) -> PhenotypeLabel) {
    occ.sort_by(|a, b| {
        label_of(a.pattern)
            .cmp(&label_of(b.pattern))
            .then((b.end - b.start).cmp(&(a.end - a.start)))
            .then(a.start.cmp(&b.start))
            .then(a.pattern.cmp(&b.pattern))
    });
    let mut kept = Vec::with_capacity(occ.len());
    let mut current: Option<PhenotypeLabel> = None;
    // start -> end of kept intervals for the current label
    let mut taken: BTreeMap<usize, usize> = BTreeMap::new();
    for o in occ.drain(..) {
        let label = label_of(o.pattern);
        if current != Some(label) {
            current = Some(label);
            taken.clear();
        }
        let overlaps_prev = taken
            .range(..o.end)
            .next_back()
            .is_some_and(|(_, &end)| end > o.start);
        if !overlaps_prev {
            taken.insert(o.start, o.end);
            kept.push(o);
        }
    }
    kept.sort_by_key(|o| (o.start, o.end, o.pattern));
    *occ = kept;
}

/// Compiles `lexicon` and matches one note (negation not applied).
pub fn find_matches(note: &Note, lexicon: &Lexicon) -> Vec<Match> {
    Matcher::new(lexicon).find_matches(&note.note_id, &note.tokens())
}

/// Sets negation flags using `lexicon`'s negation lists.
pub fn apply_negation(
    matches: &mut [Match],
    tokens: &[Token],
    lexicon: &Lexicon,
    config: &NegationConfig,
) {
    Matcher::new(lexicon).apply_negation(matches, tokens, config);
}

/// 1 for every label with at least one non-negated match.
pub fn note_label_vector(matches: &[Match]) -> LabelVector {
    matches.iter().filter(|m| !m.negated).map(|m| m.label).collect()
}

/// Per-note matching output.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteMatches {
    pub note_id: String,
    pub matches: Vec<Match>,
    pub labels: LabelVector,
}

/// Matches every note, with negation, on `workers` threads (1 = in the
/// calling thread). Output is sorted by note_id.
pub fn match_corpus(
    notes: &[Note],
    matcher: &Matcher,
    config: &NegationConfig,
    workers: usize,
) -> Result<Vec<NoteMatches>, MatchError> {
    config.validate()?;
    let one = |n: &Note| {
        let tokens = n.tokens();
        let matches = matcher.analyze(&n.note_id, &tokens, config);
        NoteMatches {
            note_id: n.note_id.clone(),
            labels: note_label_vector(&matches),
            matches,
        }
    };
    let mut out: Vec<NoteMatches> = if workers <= 1 {
        notes.iter().map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| MatchError::Pool(e.to_string()))?;
        pool.install(|| notes.par_iter().map(one).collect())
    };
    out.sort_by(|a, b| a.note_id.cmp(&b.note_id));
    Ok(out)
}

/// One JSON object per match: note_id, label, phrase, start, end, negated.
pub fn write_matches_jsonl<'a, W: Write>(
    mut w: W,
    matches: impl IntoIterator<Item = &'a Match>,
) -> Result<(), MatchError> {
    for m in matches {
        serde_json::to_writer(&mut w, m).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
