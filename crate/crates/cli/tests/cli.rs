//! End-to-end runs of the `pheno` binary: the full pipeline on a synthetic
//! corpus, determinism of every stage, and the exit-code contract.

mod common;

use common::*;
use pheno_core::evaluation::PhenotypeMatrix;
use pheno_core::lexicon::Lexicon;
use pheno_core::PhenotypeLabel;

fn read(path: &std::path::Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Ingested corpus, lexicon file and truth matrix in a fresh workspace.
fn prepared(n: usize) -> (Workspace, Vec<(String, String, pheno_core::LabelVector)>) {
    let ws = Workspace::new();
    let notes = synthetic_notes(n, 11);
    write_raw_csv(&ws.path("raw.csv"), &notes);
    write_truth_csv(&ws.path("truth.csv"), &notes);
    planted_lexicon().save(ws.path("lexicon.json")).unwrap();
    pheno(&[
        "ingest",
        "--input",
        p(&ws.path("raw.csv")),
        "--id-column",
        "id",
        "--text-column",
        "body",
        "--output",
        p(&ws.path("corpus.csv")),
    ])
    .assert_ok();
    (ws, notes)
}

#[test]
fn ingest_renames_columns_and_keeps_meta() {
    let (ws, notes) = prepared(12);
    let text = String::from_utf8(read(&ws.path("corpus.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("note_id,text,clinic"));
    assert_eq!(text.lines().count(), notes.len() + 1);
    assert!(text.contains(&notes[0].1));

    let bad = ws.path("dup.csv");
    std::fs::write(&bad, "id,body\n170,a\n170,b\n").unwrap();
    let r = pheno(&["ingest", "--input", p(&bad), "--id-column", "id", "--text-column", "body", "--output", p(&ws.path("x.csv"))]);
    assert_eq!(r.code, 1);
    let line = r.error_line().unwrap();
    assert!(line.starts_with("ERROR schema:") && line.contains("170"), "{line}");
}

#[test]
fn match_train_predict_evaluate_pipeline() {
    let (ws, notes) = prepared(160);
    let corpus = ws.path("corpus.csv");
    let lexicon = ws.path("lexicon.json");

    pheno(&[
        "match",
        "--corpus",
        p(&corpus),
        "--lexicon",
        p(&lexicon),
        "--output",
        p(&ws.path("matched.csv")),
        "--matches",
        p(&ws.path("matches.jsonl")),
        "--workers",
        "2",
    ])
    .assert_ok();
    let matched = PhenotypeMatrix::load_csv(ws.path("matched.csv")).unwrap();
    let truth = PhenotypeMatrix::load_csv(ws.path("truth.csv")).unwrap();
    assert_eq!(matched.reindex(truth.note_ids()).unwrap(), truth, "matcher reproduces planted truth");
    let dump = String::from_utf8(read(&ws.path("matches.jsonl"))).unwrap();
    let first: serde_json::Value = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
    for key in ["note_id", "label", "phrase", "start", "end", "negated"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert!(dump.contains("\"negated\":true"));

    let train = |out: &str| {
        pheno(&[
            "train-classifier",
            "--corpus",
            p(&corpus),
            "--lexicon",
            p(&lexicon),
            "--output",
            p(&ws.path(out)),
            "--lambda",
            "0.01",
            "--seed",
            "4",
        ])
    };
    train("model.bin").assert_ok();
    train("model2.bin").assert_ok();
    assert_eq!(read(&ws.path("model.bin")), read(&ws.path("model2.bin")), "same seed, same model bytes");

    pheno(&[
        "predict",
        "--corpus",
        p(&corpus),
        "--lexicon",
        p(&lexicon),
        "--model",
        p(&ws.path("model.bin")),
        "--output",
        p(&ws.path("pred.csv")),
        "--margins",
        p(&ws.path("margins.csv")),
    ])
    .assert_ok();
    let margins = String::from_utf8(read(&ws.path("margins.csv"))).unwrap();
    assert_eq!(margins.lines().count(), notes.len() + 1);
    // labels never seen in the corpus are untrained
    assert!(margins.lines().nth(1).unwrap().contains("-inf"));

    let eval = pheno(&[
        "evaluate",
        "--gold",
        p(&ws.path("truth.csv")),
        "--pred",
        &format!("hybrid={}", p(&ws.path("pred.csv"))),
        "--pred",
        p(&ws.path("matched.csv")),
    ]);
    eval.assert_ok();
    let lines: Vec<&str> = eval.stdout.lines().collect();
    assert_eq!(
        lines[0].split_whitespace().collect::<Vec<_>>(),
        ["Implementation", "Accuracy", "Precision", "Recall", "Specificity", "F1"]
    );
    assert!(lines[1].starts_with("hybrid"));
    assert!(lines[2].starts_with("matched"));

    let json = pheno(&["evaluate", "--gold", p(&ws.path("truth.csv")), "--pred", p(&ws.path("pred.csv")), "--format", "json"]);
    json.assert_ok();
    let v: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    let per_label = v[0]["per_label"].as_array().unwrap();
    assert_eq!(per_label.len(), 19);
    for (label, _) in PLANTED {
        let row = per_label.iter().find(|r| r["label"] == label.name()).unwrap();
        let f1 = row["metrics"]["f1"].as_f64().unwrap();
        assert!(f1 >= 0.95, "{label}: F1 {f1}");
    }

    let report = pheno(&["report", "--input", p(&ws.path("truth.csv")), "--format", "csv"]);
    report.assert_ok();
    let total: usize = report.stdout.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, truth.ones());
}

#[test]
fn embeddings_and_expansion_are_deterministic() {
    let (ws, _) = prepared(120);
    let corpus = ws.path("corpus.csv");
    let train = |out: &str| {
        pheno(&[
            "train-embeddings",
            "--corpus",
            p(&corpus),
            "--output",
            p(&ws.path(out)),
            "--dim",
            "12",
            "--epochs",
            "2",
            "--seed",
            "3",
        ])
    };
    train("a.vec").assert_ok();
    train("b.vec").assert_ok();
    assert_eq!(read(&ws.path("a.vec")), read(&ws.path("b.vec")));
    let header = String::from_utf8(read(&ws.path("a.vec"))).unwrap();
    let dims: Vec<usize> = header.lines().next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
    assert_eq!(dims[1], 12);

    let expand = |threshold: &str| {
        pheno(&[
            "expand",
            "--lexicon",
            p(&ws.path("lexicon.json")),
            "--embeddings",
            p(&ws.path("a.vec")),
            "--threshold",
            threshold,
        ])
    };
    let r = expand("0.3");
    r.assert_ok();
    let sims: Vec<f64> = r
        .stdout
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["similarity"].as_f64().unwrap())
        .collect();
    assert!(!sims.is_empty());
    assert!(sims.iter().all(|&s| s >= 0.3));
    assert!(sims.windows(2).all(|w| w[0] >= w[1]), "sorted by similarity");
    assert_eq!(expand("0.3").stdout, r.stdout);
    assert!(expand("1.0").stdout.lines().count() <= sims.len());
    assert_eq!(expand("1.5").code, 1, "threshold outside (0, 1]");
}

#[test]
fn llm_run_then_offline_rescore_matches() {
    let (ws, notes) = prepared(20);
    let mock = MockLlm::start(1);
    let run = pheno_with_env(
        &[
            "llm-run",
            "--corpus",
            p(&ws.path("corpus.csv")),
            "--output",
            p(&ws.path("llm.csv")),
            "--audit",
            p(&ws.path("audit.jsonl")),
            "--endpoint",
            &mock.url,
            "--backoff-base-ms",
            "1",
            "--workers",
            "2",
            "--sessions",
        ],
        &[("PHENO_LLM_TOKEN", TOKEN)],
    );
    run.assert_ok();
    assert_eq!(mock.requests.load(std::sync::atomic::Ordering::SeqCst), notes.len() + 1, "one 429 retried");
    let llm = PhenotypeMatrix::load_csv(ws.path("llm.csv")).unwrap();
    let truth = PhenotypeMatrix::load_csv(ws.path("truth.csv")).unwrap();
    assert_eq!(llm, truth);

    let gold_path = ws.path("truth.csv");
    let gold = p(&gold_path);
    let live = pheno(&["evaluate", "--gold", gold, "--pred", &format!("gpt={}", p(&ws.path("llm.csv"))), "--format", "json"]);
    let offline = pheno(&["evaluate", "--gold", gold, "--audit", &format!("gpt={}", p(&ws.path("audit.jsonl"))), "--format", "json"]);
    live.assert_ok();
    offline.assert_ok();
    assert_eq!(live.stdout, offline.stdout);
}

#[test]
fn llm_run_auth_and_token_failures() {
    let (ws, _) = prepared(4);
    let mock = MockLlm::start(0);
    let (corpus, out, audit) = (ws.path("corpus.csv"), ws.path("llm.csv"), ws.path("audit.jsonl"));
    let args = [
        "llm-run",
        "--corpus",
        p(&corpus),
        "--output",
        p(&out),
        "--audit",
        p(&audit),
        "--endpoint",
        &mock.url,
    ];
    let missing = pheno(&args);
    assert_eq!(missing.code, 1);
    assert!(missing.error_line().unwrap().starts_with("ERROR config:"), "{}", missing.stderr);
    assert_eq!(mock.requests.load(std::sync::atomic::Ordering::SeqCst), 0, "no request without a token");

    let denied = pheno_with_env(&args, &[("PHENO_LLM_TOKEN", "wrong")]);
    assert_eq!(denied.code, 2);
    assert!(denied.error_line().unwrap().starts_with("ERROR auth:"), "{}", denied.stderr);
    assert!(!ws.path("llm.csv").exists(), "no matrix after a fatal error");
}

#[test]
fn usage_and_validation_errors_exit_1() {
    let ws = Workspace::new();
    let r = pheno(&["match", "--bogus"]);
    assert_eq!(r.code, 1);
    assert!(r.error_line().unwrap().starts_with("ERROR usage:"), "{}", r.stderr);
    assert_eq!(r.stderr.lines().count(), 1);

    assert_eq!(pheno(&[]).code, 1);
    assert_eq!(pheno(&["--help"]).code, 0);

    let r = pheno(&["match", "--corpus", "/nonexistent/c.csv", "--lexicon", "/nonexistent/l.json", "--output", p(&ws.path("m.csv"))]);
    assert_eq!(r.code, 1);
    assert!(r.error_line().unwrap().starts_with("ERROR missing-file:"), "{}", r.stderr);

    let bad_lex = ws.path("bad.json");
    std::fs::write(&bad_lex, r#"{"simclins": [], "negations": []}"#).unwrap();
    let r = pheno(&["expand", "--lexicon", p(&bad_lex), "--embeddings", p(&bad_lex)]);
    assert_eq!(r.code, 1);
    assert!(r.error_line().unwrap().starts_with("ERROR schema:"), "{}", r.stderr);

    let r = pheno(&["evaluate", "--gold", p(&bad_lex)]);
    assert_eq!(r.code, 1);
    assert!(r.error_line().unwrap().starts_with("ERROR usage:"));
}

#[test]
fn predict_on_empty_lexicon_exits_1() {
    let (ws, _) = prepared(30);
    pheno(&[
        "train-classifier",
        "--corpus",
        p(&ws.path("corpus.csv")),
        "--lexicon",
        p(&ws.path("lexicon.json")),
        "--output",
        p(&ws.path("model.bin")),
    ])
    .assert_ok();
    let empty = ws.path("empty.json");
    Lexicon::default().save(&empty).unwrap();
    let r = pheno(&[
        "predict",
        "--corpus",
        p(&ws.path("corpus.csv")),
        "--lexicon",
        p(&empty),
        "--model",
        p(&ws.path("model.bin")),
        "--output",
        p(&ws.path("pred.csv")),
    ]);
    assert_eq!(r.code, 1);
    let line = r.error_line().unwrap();
    assert!(line.starts_with("ERROR empty-lexicon:"), "{line}");
    assert!(!ws.path("pred.csv").exists());
}

#[test]
fn evaluate_reads_span_annotations_and_reports_misalignment() {
    let ws = Workspace::new();
    let gold = ws.path("gold.jsonl");
    std::fs::write(
        &gold,
        concat!(
            r#"{"text":"She has a burning sensation in their feet.","spans":[{"start":10,"end":41,"label":"paresthesias"}],"meta":{"note_id":"170"},"answer":"accept"}"#,
            "\n",
            r#"{"text":"Walks with a cane.","spans":[{"start":0,"end":18,"label":"gait"}],"meta":{"note_id":"171"}}"#,
            "\n"
        ),
    )
    .unwrap();
    let mut header = String::from("note_id");
    for l in PhenotypeLabel::ALL {
        header.push(',');
        header.push_str(l.name());
    }
    let row = |id: &str, ones: &[PhenotypeLabel]| {
        let mut s = id.to_string();
        for l in PhenotypeLabel::ALL {
            s.push_str(if ones.contains(&l) { ",1" } else { ",0" });
        }
        s
    };
    let pred = ws.path("pred.csv");
    std::fs::write(
        &pred,
        format!(
            "{header}\n{}\n{}\n{}\n",
            row("170", &[PhenotypeLabel::Paresthesias]),
            row("171", &[PhenotypeLabel::Gait, PhenotypeLabel::Pain]),
            row("999", &[PhenotypeLabel::Pain]),
        ),
    )
    .unwrap();
    let r = pheno(&["evaluate", "--gold", p(&gold), "--pred", p(&pred), "--per-label", "--decimals", "3"]);
    r.assert_ok();
    // gait and paresthesias perfect, pain one false positive, the rest 0/0
    assert!(r.stdout.contains("Paresthesias"));
    assert!(r.stdout.contains("(2 notes)"));

    let short = ws.path("short.csv");
    std::fs::write(&short, format!("{header}\n{}\n", row("170", &[]))).unwrap();
    let r = pheno(&["evaluate", "--gold", p(&gold), "--pred", p(&short)]);
    assert_eq!(r.code, 1);
    assert!(r.error_line().unwrap().starts_with("ERROR alignment:"), "{}", r.stderr);

    let freq = pheno(&["report", "--input", p(&gold)]);
    freq.assert_ok();
    assert!(freq.stdout.lines().nth(1).unwrap().starts_with("Gait"), "{}", freq.stdout);
}
