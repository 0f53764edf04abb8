//! The closed set of neurological phenotype labels and fixed-width label vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of phenotype labels.
pub const LABEL_COUNT: usize = 19;

/// A phenotype category. The declaration order is the canonical column order
/// used by every matrix and vector in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhenotypeLabel {
    Behavior,
    Cognitive,
    Eom,
    Fatigue,
    Gait,
    Hyperreflexia,
    Hypertonia,
    Hyporeflexia,
    Sphincter,
    Incoordination,
    On,
    Pain,
    Paresthesias,
    Seizure,
    Sleep,
    Speech,
    Tremor,
    Vision,
    Weakness,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown phenotype label {0:?}")]
pub struct UnknownLabel(pub String);

impl PhenotypeLabel {
    pub const ALL: [PhenotypeLabel; LABEL_COUNT] = [
        PhenotypeLabel::Behavior,
        PhenotypeLabel::Cognitive,
        PhenotypeLabel::Eom,
        PhenotypeLabel::Fatigue,
        PhenotypeLabel::Gait,
        PhenotypeLabel::Hyperreflexia,
        PhenotypeLabel::Hypertonia,
        PhenotypeLabel::Hyporeflexia,
        PhenotypeLabel::Sphincter,
        PhenotypeLabel::Incoordination,
        PhenotypeLabel::On,
        PhenotypeLabel::Pain,
        PhenotypeLabel::Paresthesias,
        PhenotypeLabel::Seizure,
        PhenotypeLabel::Sleep,
        PhenotypeLabel::Speech,
        PhenotypeLabel::Tremor,
        PhenotypeLabel::Vision,
        PhenotypeLabel::Weakness,
    ];

    /// Canonical lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            PhenotypeLabel::Behavior => "behavior",
            PhenotypeLabel::Cognitive => "cognitive",
            PhenotypeLabel::Eom => "eom",
            PhenotypeLabel::Fatigue => "fatigue",
            PhenotypeLabel::Gait => "gait",
            PhenotypeLabel::Hyperreflexia => "hyperreflexia",
            PhenotypeLabel::Hypertonia => "hypertonia",
            PhenotypeLabel::Hyporeflexia => "hyporeflexia",
            PhenotypeLabel::Sphincter => "sphincter",
            PhenotypeLabel::Incoordination => "incoordination",
            PhenotypeLabel::On => "on",
            PhenotypeLabel::Pain => "pain",
            PhenotypeLabel::Paresthesias => "paresthesias",
            PhenotypeLabel::Seizure => "seizure",
            PhenotypeLabel::Sleep => "sleep",
            PhenotypeLabel::Speech => "speech",
            PhenotypeLabel::Tremor => "tremor",
            PhenotypeLabel::Vision => "vision",
            PhenotypeLabel::Weakness => "weakness",
        }
    }

    /// Name as it appears in structured model output ("EOM", "ON", "Gait", ...).
    pub fn display_name(self) -> &'static str {
        match self {
            PhenotypeLabel::Behavior => "Behavior",
            PhenotypeLabel::Cognitive => "Cognitive",
            PhenotypeLabel::Eom => "EOM",
            PhenotypeLabel::Fatigue => "Fatigue",
            PhenotypeLabel::Gait => "Gait",
            PhenotypeLabel::Hyperreflexia => "Hyperreflexia",
            PhenotypeLabel::Hypertonia => "Hypertonia",
            PhenotypeLabel::Hyporeflexia => "Hyporeflexia",
            PhenotypeLabel::Sphincter => "Sphincter",
            PhenotypeLabel::Incoordination => "Incoordination",
            PhenotypeLabel::On => "ON",
            PhenotypeLabel::Pain => "Pain",
            PhenotypeLabel::Paresthesias => "Paresthesias",
            PhenotypeLabel::Seizure => "Seizure",
            PhenotypeLabel::Sleep => "Sleep",
            PhenotypeLabel::Speech => "Speech",
            PhenotypeLabel::Tremor => "Tremor",
            PhenotypeLabel::Vision => "Vision",
            PhenotypeLabel::Weakness => "Weakness",
        }
    }

    /// Column position in canonical order.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for PhenotypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Case-insensitive; surrounding whitespace is ignored.
impl FromStr for PhenotypeLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == needle)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for PhenotypeLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PhenotypeLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Presence/absence of every label for one note, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelVector(pub [bool; LABEL_COUNT]);

impl LabelVector {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn get(&self, label: PhenotypeLabel) -> bool {
        self.0[label.ordinal()]
    }

    pub fn set(&mut self, label: PhenotypeLabel, present: bool) {
        self.0[label.ordinal()] = present;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Labels marked present, in canonical order.
    pub fn present(&self) -> Vec<PhenotypeLabel> {
        PhenotypeLabel::ALL
            .iter()
            .copied()
            .filter(|l| self.get(*l))
            .collect()
    }

    /// 0/1 encoding.
    pub fn to_bits(&self) -> [u8; LABEL_COUNT] {
        let mut out = [0u8; LABEL_COUNT];
        for (o, &b) in out.iter_mut().zip(self.0.iter()) {
            *o = u8::from(b);
        }
        out
    }
}

impl FromIterator<PhenotypeLabel> for LabelVector {
    fn from_iter<I: IntoIterator<Item = PhenotypeLabel>>(iter: I) -> Self {
        let mut v = LabelVector::empty();
        for l in iter {
            v.set(l, true);
        }
        v
    }
}
