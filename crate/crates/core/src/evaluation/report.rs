//! Text and CSV renderings of metrics and label frequencies.

use std::fmt::Write;

use super::{Metrics, MetricsReport, PhenotypeMatrix};
use crate::label::PhenotypeLabel;

fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(header);
    for r in rows {
        line(r);
    }
    out
}

/// One row per implementation under the columns Implementation, Accuracy,
/// Precision, Recall, Specificity, F1.
pub fn render_table(rows: &[(&str, &Metrics)], decimals: usize) -> String {
    let mut header = vec!["Implementation".to_string()];
    header.extend(Metrics::NAMES.iter().map(|s| s.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, m)| {
            let mut r = vec![name.to_string()];
            r.extend(m.as_array().iter().map(|v| format!("{v:.decimals$}")));
            r
        })
        .collect();
    aligned(&header, &body)
}

/// Same rows as [`render_table`], full precision.
pub fn render_metrics_csv(rows: &[(&str, &Metrics)]) -> String {
    let mut out = String::from("implementation,accuracy,precision,recall,specificity,f1\n");
    for (name, m) in rows {
        let vals: Vec<String> = m.as_array().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{},{}", csv_field(name), vals.join(","));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-label counts and metrics followed by the macro (and micro) rows.
pub fn render_label_table(report: &MetricsReport, decimals: usize) -> String {
    let mut header: Vec<String> = ["Label", "TP", "FP", "FN", "TN"].iter().map(|s| s.to_string()).collect();
    header.extend(Metrics::NAMES.iter().map(|s| s.to_string()));
    let fmt = |m: &Metrics| m.as_array().iter().map(|v| format!("{v:.decimals$}")).collect::<Vec<_>>();
    let mut body: Vec<Vec<String>> = report
        .per_label
        .iter()
        .map(|lm| {
            let c = lm.counts;
            let mut r = vec![lm.label.display_name().to_string()];
            r.extend([c.tp, c.fp, c.fn_, c.tn].iter().map(u64::to_string));
            r.extend(fmt(&lm.metrics));
            r
        })
        .collect();
    let blank = || vec![String::new(); 4];
    let mut macro_row = vec!["macro".to_string()];
    macro_row.extend(blank());
    macro_row.extend(fmt(&report.macro_avg));
    body.push(macro_row);
    if let Some(m) = &report.micro {
        let mut r = vec!["micro".to_string()];
        r.extend(blank());
        r.extend(fmt(m));
        body.push(r);
    }
    aligned(&header, &body)
}

/// Ones per label, most frequent first (ties in canonical order).
pub fn frequency_report(matrix: &PhenotypeMatrix) -> Vec<(PhenotypeLabel, usize)> {
    let mut counts: Vec<(PhenotypeLabel, usize)> = PhenotypeLabel::ALL
        .iter()
        .map(|&l| (l, matrix.rows().iter().filter(|r| r.get(l)).count()))
        .collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    counts
}

pub fn render_frequency_csv(freq: &[(PhenotypeLabel, usize)]) -> String {
    let mut out = String::from("label,count\n");
    for (l, c) in freq {
        let _ = writeln!(out, "{},{c}", l.name());
    }
    out
}

/// Label, count and a bar of `#` scaled to at most `width` characters.
pub fn render_frequency_text(freq: &[(PhenotypeLabel, usize)], width: usize) -> String {
    let max = freq.iter().map(|f| f.1).max().unwrap_or(0);
    let name_w = freq.iter().map(|f| f.0.display_name().len()).max().unwrap_or(0).max(5);
    let count_w = freq.iter().map(|f| f.1.to_string().len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<name_w$}  {:>count_w$}\n", "Label", "Count");
    for (l, c) in freq {
        let bar = if max == 0 { 0 } else { (c * width).div_ceil(max) };
        let line = format!("{:<name_w$}  {c:>count_w$}  {}", l.display_name(), "#".repeat(bar));
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
