//! Gold span annotations, note-by-label matrices, confusion counts and
//! macro-averaged metrics, plus text and CSV reports.

mod annotations;
mod metrics;
mod report;

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::label::{LabelVector, PhenotypeLabel, LABEL_COUNT};

pub use annotations::{load_annotations, parse_annotations, spans_to_matrix, AnnotationSet, SpanAnnotation};
pub use metrics::{confusion, metrics, ConfusionCounts, LabelConfusion, LabelMetrics, Metrics, MetricsOptions, MetricsReport};
pub use report::{frequency_report, render_frequency_csv, render_frequency_text, render_label_table, render_metrics_csv, render_table};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("annotations line {line}: {message}")]
    Annotation { line: usize, message: String },
    #[error("annotation refers to note {0:?}, which is not in the note list")]
    OrphanNote(String),
    #[error("duplicate note id {0:?} in matrix")]
    DuplicateNote(String),
    #[error("matrices are not aligned: {0}")]
    Alignment(String),
    #[error("matrix CSV line {line}: {message}")]
    MatrixFormat { line: usize, message: String },
    #[error("invalid metrics option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary presence per note (rows) and label (columns, canonical order).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhenotypeMatrix {
    note_ids: Vec<String>,
    rows: Vec<LabelVector>,
}

impl PhenotypeMatrix {
    /// Rows in the given order; note ids must be unique.
    pub fn from_rows(rows: impl IntoIterator<Item = (String, LabelVector)>) -> Result<Self, EvalError> {
        let mut m = PhenotypeMatrix::default();
        let mut seen = std::collections::HashSet::new();
        for (id, v) in rows {
            if !seen.insert(id.clone()) {
                return Err(EvalError::DuplicateNote(id));
            }
            m.note_ids.push(id);
            m.rows.push(v);
        }
        Ok(m)
    }

    /// All-zero matrix over `note_ids`.
    pub fn zeros(note_ids: impl IntoIterator<Item = String>) -> Result<Self, EvalError> {
        Self::from_rows(note_ids.into_iter().map(|id| (id, LabelVector::empty())))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn note_ids(&self) -> &[String] {
        &self.note_ids
    }

    pub fn rows(&self) -> &[LabelVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &LabelVector {
        &self.rows[i]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut LabelVector {
        &mut self.rows[i]
    }

    pub fn get(&self, row: usize, label: PhenotypeLabel) -> bool {
        self.rows[row].get(label)
    }

    pub fn ones(&self) -> usize {
        self.rows.iter().map(LabelVector::count).sum()
    }

    /// The rows for `note_ids`, in that order; every id must be present.
    pub fn reindex(&self, note_ids: &[String]) -> Result<Self, EvalError> {
        let pos: HashMap<&str, usize> = self.note_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let rows = note_ids
            .iter()
            .map(|id| {
                pos.get(id.as_str())
                    .map(|&i| (id.clone(), self.rows[i]))
                    .ok_or_else(|| EvalError::Alignment(format!("note {id:?} missing")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }

    /// Header `note_id,behavior,...,weakness`, cells 0/1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["note_id"];
        header.extend(PhenotypeLabel::ALL.iter().map(|l| l.name()));
        out.write_record(&header)?;
        for (id, row) in self.note_ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.0.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        crate::lexicon::write_atomic(path.as_ref(), self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Reads the CSV form; the header must list `note_id` and the 19 labels
    /// in canonical order (label names case-insensitive).
    pub fn read_csv<R: Read>(r: R) -> Result<Self, EvalError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        let bad_header = || EvalError::MatrixFormat {
            line: 1,
            message: "header must be note_id followed by the 19 labels in canonical order".into(),
        };
        if header.len() != LABEL_COUNT + 1 || !header[0].trim().eq_ignore_ascii_case("note_id") {
            return Err(bad_header());
        }
        for (i, l) in PhenotypeLabel::ALL.iter().enumerate() {
            if header[i + 1].parse::<PhenotypeLabel>().ok() != Some(*l) {
                return Err(bad_header());
            }
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != LABEL_COUNT + 1 {
                return Err(EvalError::MatrixFormat { line, message: format!("{} fields", rec.len()) });
            }
            let mut v = LabelVector::empty();
            for l in PhenotypeLabel::ALL {
                v.set(
                    l,
                    match rec[l.ordinal() + 1].trim() {
                        "0" => false,
                        "1" => true,
                        other => {
                            return Err(EvalError::MatrixFormat {
                                line,
                                message: format!("cell {l} is {other:?}, expected 0 or 1"),
                            })
                        }
                    },
                );
            }
            rows.push((rec[0].to_string(), v));
        }
        Self::from_rows(rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PhenotypeMatrix {
        let mut a = LabelVector::empty();
        a.set(PhenotypeLabel::Weakness, true);
        a.set(PhenotypeLabel::Eom, true);
        PhenotypeMatrix::from_rows([("n1".to_string(), a), ("n2".to_string(), LabelVector::empty())]).unwrap()
    }

    #[test]
    fn csv_header_and_round_trip() {
        let m = sample();
        let s = m.to_csv_string();
        let first = s.lines().next().unwrap();
        assert!(first.starts_with("note_id,behavior,cognitive,eom,"));
        assert!(first.ends_with(",vision,weakness"));
        assert_eq!(s.lines().nth(1).unwrap(), "n1,0,0,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1");
        assert_eq!(PhenotypeMatrix::read_csv(s.as_bytes()).unwrap(), m);
    }

    #[test]
    fn csv_errors() {
        let s = sample().to_csv_string();
        assert!(PhenotypeMatrix::read_csv(s.replacen("eom", "on", 1).as_bytes()).is_err());
        assert!(matches!(
            PhenotypeMatrix::read_csv(s.replace("n2,0", "n2,2").as_bytes()),
            Err(EvalError::MatrixFormat { line: 3, .. })
        ));
        assert!(matches!(
            PhenotypeMatrix::read_csv(s.replace("n2,", "n1,").as_bytes()),
            Err(EvalError::DuplicateNote(_))
        ));
    }

    #[test]
    fn reindex_orders_and_checks() {
        let m = sample();
        let r = m.reindex(&["n2".into(), "n1".into()]).unwrap();
        assert_eq!(r.note_ids(), ["n2", "n1"]);
        assert_eq!(r.row(1), m.row(0));
        assert!(matches!(m.reindex(&["zz".into()]), Err(EvalError::Alignment(_))));
    }
}
