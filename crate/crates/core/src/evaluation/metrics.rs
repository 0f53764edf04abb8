//! Per-label confusion counts and the five ratio metrics.

use serde::{Deserialize, Serialize};

use super::{EvalError, PhenotypeMatrix};
use crate::label::{PhenotypeLabel, LABEL_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelConfusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl LabelConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, other: &LabelConfusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub per_label: [LabelConfusion; LABEL_COUNT],
    pub notes: usize,
}

impl ConfusionCounts {
    pub fn label(&self, label: PhenotypeLabel) -> &LabelConfusion {
        &self.per_label[label.ordinal()]
    }

    /// Counts pooled over all labels.
    pub fn pooled(&self) -> LabelConfusion {
        let mut c = LabelConfusion::default();
        for l in &self.per_label {
            c.add(l);
        }
        c
    }
}

/// Both matrices must list the same notes in the same order.
pub fn confusion(gold: &PhenotypeMatrix, pred: &PhenotypeMatrix) -> Result<ConfusionCounts, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Alignment(format!("{} gold rows vs {} predicted", gold.len(), pred.len())));
    }
    if let Some((g, p)) = gold.note_ids().iter().zip(pred.note_ids()).find(|(g, p)| g != p) {
        return Err(EvalError::Alignment(format!("gold note {g:?} vs predicted note {p:?}")));
    }
    let mut per_label = [LabelConfusion::default(); LABEL_COUNT];
    for (g, p) in gold.rows().iter().zip(pred.rows()) {
        for (k, c) in per_label.iter_mut().enumerate() {
            match (g.0[k], p.0[k]) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(ConfusionCounts { per_label, notes: gold.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    /// Value of any 0/0 ratio.
    pub zero_division: f64,
    /// Also report metrics over pooled counts.
    pub micro: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions { zero_division: 0.0, micro: false }
    }
}

impl MetricsOptions {
    pub fn validate(&self) -> Result<(), EvalError> {
        if (0.0..=1.0).contains(&self.zero_division) {
            Ok(())
        } else {
            Err(EvalError::InvalidOption(format!("zero_division must be in [0, 1], got {}", self.zero_division)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(c: &LabelConfusion, zero_division: f64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { zero_division } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            zero_division
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
            specificity: ratio(c.tn, c.tn + c.fp),
            f1,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.accuracy, self.precision, self.recall, self.specificity, self.f1]
    }

    pub const NAMES: [&'static str; 5] = ["Accuracy", "Precision", "Recall", "Specificity", "F1"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: PhenotypeLabel,
    pub counts: LabelConfusion,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub notes: usize,
    pub per_label: Vec<LabelMetrics>,
    /// Unweighted mean over the 19 labels.
    pub macro_avg: Metrics,
    pub micro: Option<Metrics>,
    pub options: MetricsOptions,
}

pub fn metrics(confusion: &ConfusionCounts, options: &MetricsOptions) -> MetricsReport {
    let per_label: Vec<LabelMetrics> = PhenotypeLabel::ALL
        .iter()
        .map(|&label| {
            let counts = *confusion.label(label);
            LabelMetrics { label, counts, metrics: Metrics::from_counts(&counts, options.zero_division) }
        })
        .collect();
    let mut sums = [0.0f64; 5];
    for lm in &per_label {
        for (s, v) in sums.iter_mut().zip(lm.metrics.as_array()) {
            *s += v;
        }
    }
    let n = LABEL_COUNT as f64;
    let macro_avg = Metrics {
        accuracy: sums[0] / n,
        precision: sums[1] / n,
        recall: sums[2] / n,
        specificity: sums[3] / n,
        f1: sums[4] / n,
    };
    MetricsReport {
        notes: confusion.notes,
        micro: options.micro.then(|| Metrics::from_counts(&confusion.pooled(), options.zero_division)),
        per_label,
        macro_avg,
        options: *options,
    }
}
