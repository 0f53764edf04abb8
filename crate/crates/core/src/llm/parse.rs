//! The answer grammar: one `<Label>: <value>` line per label, `None` for
//! absent. Parsing is strict so a dropped or misspelled line never turns
//! silently into a 0.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::label::{LabelVector, PhenotypeLabel, LABEL_COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: expected \"<label>: <value>\", got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate label {label}")]
    DuplicateLabel { line: usize, label: PhenotypeLabel },
    #[error("line {line}: empty value for {label}")]
    EmptyValue { line: usize, label: PhenotypeLabel },
    #[error("missing labels: {}", .0.iter().map(|l| l.name()).collect::<Vec<_>>().join(", "))]
    MissingLabels(Vec<PhenotypeLabel>),
}

/// Evidence text per label; `None` means absent. Serializes as an object
/// keyed by label name in canonical order, `null` for absent labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedPhenotype {
    entries: [Option<String>; LABEL_COUNT],
}

impl Serialize for ParsedPhenotype {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(LABEL_COUNT))?;
        for l in PhenotypeLabel::ALL {
            map.serialize_entry(l.name(), &self.entries[l.ordinal()])?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ParsedPhenotype {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<PhenotypeLabel, Option<String>> = BTreeMap::deserialize(deserializer)?;
        if raw.len() != LABEL_COUNT {
            return Err(serde::de::Error::custom(format!("expected {LABEL_COUNT} labels, got {}", raw.len())));
        }
        let mut p = ParsedPhenotype::default();
        for (l, v) in raw {
            p.entries[l.ordinal()] = v;
        }
        Ok(p)
    }
}

impl ParsedPhenotype {
    pub fn present(&self, label: PhenotypeLabel) -> bool {
        self.entries[label.ordinal()].is_some()
    }

    pub fn evidence(&self, label: PhenotypeLabel) -> Option<&str> {
        self.entries[label.ordinal()].as_deref()
    }

    pub fn to_vector(&self) -> LabelVector {
        LabelVector(std::array::from_fn(|i| self.entries[i].is_some()))
    }

    /// Present labels get the evidence text `"present"`.
    pub fn from_vector(v: &LabelVector) -> Self {
        ParsedPhenotype {
            entries: std::array::from_fn(|i| v.0[i].then(|| "present".to_string())),
        }
    }
}

fn is_none_value(v: &str) -> bool {
    v.trim().eq_ignore_ascii_case("none")
}

pub fn parse_response(raw: &str) -> Result<ParsedPhenotype, ParseError> {
    let mut seen = [false; LABEL_COUNT];
    let mut parsed = ParsedPhenotype::default();
    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let Some((name, value)) = text.split_once(':') else {
            return Err(ParseError::Malformed { line: line_no, text: text.to_string() });
        };
        let label: PhenotypeLabel = name
            .parse()
            .map_err(|_| ParseError::UnknownLabel { line: line_no, label: name.trim().to_string() })?;
        let k = label.ordinal();
        if seen[k] {
            return Err(ParseError::DuplicateLabel { line: line_no, label });
        }
        seen[k] = true;
        let value = value.trim();
        if value.is_empty() {
            return Err(ParseError::EmptyValue { line: line_no, label });
        }
        if !is_none_value(value) {
            parsed.entries[k] = Some(value.to_string());
        }
    }
    let missing: Vec<PhenotypeLabel> = PhenotypeLabel::ALL
        .into_iter()
        .filter(|l| !seen[l.ordinal()])
        .collect();
    if missing.is_empty() {
        Ok(parsed)
    } else {
        Err(ParseError::MissingLabels(missing))
    }
}

/// Emits the answer grammar, one line per label in canonical order.
pub fn render(p: &ParsedPhenotype) -> String {
    let mut out = String::new();
    for l in PhenotypeLabel::ALL {
        out.push_str(l.display_name());
        out.push_str(": ");
        out.push_str(p.evidence(l).unwrap_or("None"));
        out.push('\n');
    }
    out
}

pub fn render_vector(v: &LabelVector) -> String {
    render(&ParsedPhenotype::from_vector(v))
}
