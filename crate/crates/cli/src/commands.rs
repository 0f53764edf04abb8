//! Subcommand bodies. Each reads its inputs, does the work in memory and
//! writes every output file with write-then-rename, so a failed run leaves
//! earlier outputs untouched.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pheno_core::classifier::{train_pu, LinearModel, Predictor};
use pheno_core::corpus::{ingest_csv, surfaces, write_csv, Note};
use pheno_core::embedding::{detect_phrases, train, EmbeddingModel};
use pheno_core::evaluation::{
    confusion, frequency_report, load_annotations, metrics, render_frequency_csv, render_frequency_text,
    render_label_table, render_metrics_csv, render_table, Metrics, MetricsOptions, MetricsReport, PhenotypeMatrix,
};
use pheno_core::lexicon::{write_atomic, Lexicon};
use pheno_core::llm::{read_audit, rescore_audit, run_corpus, AuditLog};
use pheno_core::matcher::{match_corpus, write_matches_jsonl, Matcher, NegationConfig};
use pheno_core::PhenotypeLabel;
use serde::Serialize;

use crate::config::{require_file, require_output_dir, RunConfig};
use crate::error::{CliError, CliResult, ErrorCode};
use crate::{Cli, Command, CorpusArgs, FrequencyFormat, NegationArgs, TableFormat};

pub fn run(cli: Cli) -> CliResult<()> {
    let base = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = base.with_overrides(cli.global.seed, cli.global.workers)?;
    match cli.command {
        Command::Ingest { input, id_column, text_column, output } => ingest(&input, &id_column, &text_column, &output),
        Command::TrainEmbeddings {
            corpus,
            output,
            dim,
            window,
            negative_samples,
            epochs,
            min_count,
            learning_rate,
            phrase_min_count,
            phrase_threshold,
        } => {
            let mut e = cfg.embedding.clone();
            set(&mut e.dim, dim);
            set(&mut e.window, window);
            set(&mut e.negative_samples, negative_samples);
            set(&mut e.epochs, epochs);
            set(&mut e.min_count, min_count);
            set(&mut e.initial_learning_rate, learning_rate);
            set(&mut e.phrase_min_count, phrase_min_count);
            set(&mut e.phrase_score_threshold, phrase_threshold);
            e.validate()?;
            let notes = load_corpus(&corpus)?;
            require_output_dir(&output)?;
            let tokens: Vec<Vec<String>> = notes.iter().map(|n| surfaces(&n.tokens())).collect();
            let phrased = detect_phrases(&tokens, &e);
            let model = train(&phrased, &e, cfg.seed)?;
            let mut buf = Vec::new();
            model.write_text(&mut buf)?;
            write_output(&output, &buf)?;
            eprintln!("trained {} vectors of dimension {} on {} notes", model.len(), model.dim(), notes.len());
            Ok(())
        }
        Command::Expand { lexicon, embeddings, threshold, limit_per_seed, output } => {
            let mut lex = load_lexicon(&lexicon)?;
            if let Some(t) = threshold {
                lex.set_threshold(t)?;
            }
            require_anchors(&lex, &lexicon)?;
            if limit_per_seed == 0 {
                return Err(CliError::new(ErrorCode::InvalidArgument, "limit-per-seed must be >= 1"));
            }
            let model = load_embeddings(&embeddings)?;
            let batch = lex.generate_candidates(&model, limit_per_seed);
            for s in &batch.skipped {
                eprintln!("warning: anchor {:?} ({}) skipped: {}", s.phrase, s.label, s.reason);
            }
            let mut out = String::new();
            for c in &batch.candidates {
                out.push_str(&serde_json::to_string(c).expect("candidate serializes"));
                out.push('\n');
            }
            emit(output.as_deref(), &out)?;
            eprintln!("{} candidates at similarity >= {}", batch.candidates.len(), lex.threshold());
            Ok(())
        }
        Command::ReviewServe { lexicon, embeddings, corpus, host, port, ui_dir, limit_per_seed } => {
            let lex = load_lexicon(&lexicon)?;
            let model = load_embeddings(&embeddings)?;
            let notes = load_corpus(&corpus)?;
            if let Some(dir) = &ui_dir {
                if !dir.is_dir() {
                    return Err(CliError::new(
                        ErrorCode::MissingFile,
                        format!("UI directory {} does not exist", dir.display()),
                    ));
                }
            }
            if limit_per_seed == 0 {
                return Err(CliError::new(ErrorCode::InvalidArgument, "limit-per-seed must be >= 1"));
            }
            let state = crate::review::ReviewState::new(lex, lexicon, model, notes, limit_per_seed);
            crate::review::serve(state, &host, port, ui_dir)
        }
        Command::Match { corpus, lexicon, negation, output, matches } => {
            let notes = load_corpus(&corpus)?;
            let lex = load_lexicon(&lexicon)?;
            require_anchors(&lex, &lexicon)?;
            let neg = negation_config(cfg.negation, &negation);
            require_output_dir(&output)?;
            if let Some(m) = &matches {
                require_output_dir(m)?;
            }
            let results = match_corpus(&notes, &Matcher::new(&lex), &neg, cfg.workers)?;
            let matrix = PhenotypeMatrix::from_rows(results.iter().map(|r| (r.note_id.clone(), r.labels)))?;
            write_output(&output, matrix.to_csv_string().as_bytes())?;
            if let Some(m) = &matches {
                let mut buf = Vec::new();
                write_matches_jsonl(&mut buf, results.iter().flat_map(|r| &r.matches))?;
                write_output(m, &buf)?;
            }
            let total: usize = results.iter().map(|r| r.matches.len()).sum();
            let negated: usize = results.iter().flat_map(|r| &r.matches).filter(|m| m.negated).count();
            eprintln!("{} notes, {total} matches ({negated} negated), {} positive cells", notes.len(), matrix.ones());
            Ok(())
        }
        Command::TrainClassifier { corpus, lexicon, negation, output, lambda, epochs, negative_ratio } => {
            let mut params = cfg.classifier.clone();
            set(&mut params.lambda, lambda);
            set(&mut params.epochs, epochs);
            set(&mut params.negative_sample_ratio, negative_ratio);
            params.negation = negation_config(params.negation, &negation);
            params.validate()?;
            let notes = load_corpus(&corpus)?;
            let lex = load_lexicon(&lexicon)?;
            require_anchors(&lex, &lexicon)?;
            require_output_dir(&output)?;
            let model = train_pu(&notes, &lex, &params)?;
            write_output(&output, &model.to_bytes())?;
            let mut summary = String::from("label           positives  negatives  trained\n");
            for lm in &model.labels {
                let _ = writeln!(summary, "{:<15} {:>9}  {:>9}  {}", lm.label.name(), lm.positives, lm.negatives, lm.trained);
            }
            eprint!("{summary}");
            Ok(())
        }
        Command::Predict { corpus, lexicon, model, output, margins } => {
            let lex = load_lexicon(&lexicon)?;
            require_anchors(&lex, &lexicon)?;
            require_file(&model)?;
            let m = LinearModel::load(&model).map_err(|e| CliError::from(e).at(&model))?;
            let notes = load_corpus(&corpus)?;
            require_output_dir(&output)?;
            if let Some(p) = &margins {
                require_output_dir(p)?;
            }
            let preds = Predictor::new(&m, &lex).predict_all_on(&notes, cfg.workers);
            let matrix = PhenotypeMatrix::from_rows(notes.iter().map(|n| n.note_id.clone()).zip(preds.iter().map(|p| p.labels)))?;
            write_output(&output, matrix.to_csv_string().as_bytes())?;
            if let Some(p) = &margins {
                let mut out = header_line();
                for (n, pred) in notes.iter().zip(&preds) {
                    out.push_str(&csv_field(&n.note_id));
                    for v in pred.margins {
                        let _ = write!(out, ",{v}");
                    }
                    out.push('\n');
                }
                write_output(p, out.as_bytes())?;
            }
            eprintln!("{} notes, {} positive cells", notes.len(), matrix.ones());
            Ok(())
        }
        Command::LlmRun {
            corpus,
            output,
            audit,
            endpoint,
            model,
            token_env,
            timeout_secs,
            max_retries,
            backoff_base_ms,
            temperature,
            requests_per_minute,
            sessions,
            no_format_hint,
        } => {
            let mut llm = cfg.llm.clone();
            set(&mut llm.endpoint, endpoint);
            set(&mut llm.model, model);
            set(&mut llm.token_env, token_env);
            set(&mut llm.timeout_secs, timeout_secs);
            set(&mut llm.max_retries, max_retries);
            set(&mut llm.backoff_base_ms, backoff_base_ms);
            set(&mut llm.temperature, temperature);
            if requests_per_minute.is_some() {
                llm.requests_per_minute = requests_per_minute;
            }
            llm.sessions |= sessions;
            llm.format_hint &= !no_format_hint;
            llm.validate()?;
            let notes = load_corpus(&corpus)?;
            require_output_dir(&output)?;
            require_output_dir(&audit)?;
            let log = AuditLog::create(&audit).map_err(|e| CliError::from(e).at(&audit))?;
            let run = run_corpus(&notes, &llm, Some(&log))?;
            let matrix = run.to_matrix();
            write_output(&output, matrix.to_csv_string().as_bytes())?;
            for f in run.failures() {
                eprintln!("warning: note {:?} failed: {}", f.note_id, f.error.as_deref().unwrap_or(""));
            }
            eprintln!("{} notes, {} failed (scored as all-absent)", notes.len(), run.failure_count());
            Ok(())
        }
        Command::Evaluate { gold, pred, audit, zero_division, micro, per_label, format, decimals, output } => {
            let options = MetricsOptions { zero_division, micro };
            options.validate()?;
            if pred.is_empty() && audit.is_empty() {
                return Err(CliError::new(ErrorCode::Usage, "evaluate needs at least one --pred or --audit"));
            }
            let gold_matrix = load_gold(&gold)?;
            let mut rows: Vec<(String, MetricsReport)> = Vec::new();
            for spec in &pred {
                let (name, path) = split_named(spec);
                require_file(&path)?;
                let m = PhenotypeMatrix::load_csv(&path).map_err(|e| CliError::from(e).at(&path))?;
                rows.push((name, score(&gold_matrix, &m, &options).map_err(|e| e.at(&path))?));
            }
            for spec in &audit {
                let (name, path) = split_named(spec);
                require_file(&path)?;
                let records = read_audit(&path).map_err(|e| CliError::from(e).at(&path))?;
                let m = rescore_audit(&records).to_matrix();
                rows.push((name, score(&gold_matrix, &m, &options).map_err(|e| e.at(&path))?));
            }
            emit(output.as_deref(), &render_evaluation(&rows, format, per_label, decimals))
        }
        Command::Report { input, format, width, output } => {
            let matrix = load_gold(&input)?;
            let freq = frequency_report(&matrix);
            let text = match format {
                FrequencyFormat::Text => render_frequency_text(&freq, width),
                FrequencyFormat::Csv => render_frequency_csv(&freq),
            };
            emit(output.as_deref(), &text)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn negation_config(mut base: NegationConfig, args: &NegationArgs) -> NegationConfig {
    set(&mut base.pre_window, args.pre_window);
    set(&mut base.post_window, args.post_window);
    base
}

fn ingest(input: &Path, id_column: &str, text_column: &str, output: &Path) -> CliResult<()> {
    require_file(input)?;
    let corpus = ingest_csv(input, id_column, text_column).map_err(|e| CliError::from(e).at(input))?;
    require_output_dir(output)?;
    for w in &corpus.warnings {
        eprintln!("warning: row {} ({:?}) skipped: {}", w.row, w.note_id, w.message);
    }
    let mut buf = Vec::new();
    write_csv(&corpus.notes, &mut buf)?;
    write_output(output, &buf)?;
    eprintln!("{} notes ingested, {} rows skipped", corpus.notes.len(), corpus.warnings.len());
    Ok(())
}

pub fn load_corpus(args: &CorpusArgs) -> CliResult<Vec<Note>> {
    require_file(&args.corpus)?;
    let corpus =
        ingest_csv(&args.corpus, &args.id_column, &args.text_column).map_err(|e| CliError::from(e).at(&args.corpus))?;
    for w in &corpus.warnings {
        log::warn!("row {} ({:?}) skipped: {}", w.row, w.note_id, w.message);
    }
    Ok(corpus.notes)
}

pub fn load_lexicon(path: &Path) -> CliResult<Lexicon> {
    require_file(path)?;
    Lexicon::load(path).map_err(|e| CliError::from(e).at(path))
}

pub fn load_embeddings(path: &Path) -> CliResult<EmbeddingModel> {
    require_file(path)?;
    EmbeddingModel::load(path).map_err(|e| CliError::from(e).at(path))
}

fn require_anchors(lex: &Lexicon, path: &Path) -> CliResult<()> {
    if lex.active_simclins().next().is_none() {
        Err(CliError::new(ErrorCode::EmptyLexicon, "lexicon has no seed or accepted simclins").at(path))
    } else {
        Ok(())
    }
}

/// A matrix CSV, or span annotations when the file ends in `.jsonl` or
/// `.json`.
fn load_gold(path: &Path) -> CliResult<PhenotypeMatrix> {
    require_file(path)?;
    let is_jsonl = matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"));
    let loaded = if is_jsonl {
        load_annotations(path).and_then(|a| a.to_matrix())
    } else {
        PhenotypeMatrix::load_csv(path)
    };
    loaded.map_err(|e| CliError::from(e).at(path))
}

/// `NAME=PATH` or a bare path named after its file stem.
fn split_named(spec: &str) -> (String, PathBuf) {
    if let Some((name, path)) = spec.split_once('=') {
        if !name.is_empty() && !name.contains(['/', '\\']) {
            return (name.to_string(), PathBuf::from(path));
        }
    }
    let path = PathBuf::from(spec);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
    (name, path)
}

/// Scores `pred` on the gold notes; predictions for other notes are ignored.
fn score(gold: &PhenotypeMatrix, pred: &PhenotypeMatrix, options: &MetricsOptions) -> CliResult<MetricsReport> {
    let aligned = pred.reindex(gold.note_ids())?;
    Ok(metrics(&confusion(gold, &aligned)?, options))
}

#[derive(Serialize)]
struct NamedReport<'a> {
    name: &'a str,
    #[serde(flatten)]
    report: &'a MetricsReport,
}

fn render_evaluation(rows: &[(String, MetricsReport)], format: TableFormat, per_label: bool, decimals: usize) -> String {
    let micro_names: Vec<String> = rows.iter().map(|(n, _)| format!("{n} (micro)")).collect();
    let mut table: Vec<(&str, &Metrics)> = rows.iter().map(|(n, r)| (n.as_str(), &r.macro_avg)).collect();
    for ((_, r), name) in rows.iter().zip(&micro_names) {
        if let Some(m) = &r.micro {
            table.push((name.as_str(), m));
        }
    }
    match format {
        TableFormat::Json => {
            let named: Vec<NamedReport> = rows.iter().map(|(name, report)| NamedReport { name, report }).collect();
            let mut s = serde_json::to_string_pretty(&named).expect("reports serialize");
            s.push('\n');
            s
        }
        TableFormat::Csv => render_metrics_csv(&table),
        TableFormat::Text => {
            let mut s = render_table(&table, decimals);
            if per_label {
                for (name, r) in rows {
                    let _ = write!(s, "\n{name} ({} notes)\n{}", r.notes, render_label_table(r, decimals));
                }
            }
            s
        }
    }
}

fn header_line() -> String {
    let mut h = String::from("note_id");
    for l in PhenotypeLabel::ALL {
        h.push(',');
        h.push_str(l.name());
    }
    h.push('\n');
    h
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    require_output_dir(path)?;
    write_atomic(path, bytes).map_err(|e| CliError::from(e).at(path))
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_output(p, text.as_bytes()),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_specs() {
        assert_eq!(split_named("hybrid=out/pred.csv"), ("hybrid".to_string(), PathBuf::from("out/pred.csv")));
        assert_eq!(split_named("out/pred.csv"), ("pred".to_string(), PathBuf::from("out/pred.csv")));
        assert_eq!(split_named("dir/a=b.csv"), ("a=b".to_string(), PathBuf::from("dir/a=b.csv")));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
        assert!(header_line().starts_with("note_id,behavior,cognitive"));
        assert!(header_line().ends_with(",weakness\n"));
    }
}
