//! Fixtures shared by the integration tests: a scripted chat-completion
//! server, a planted-phenotype note generator, and a cell-by-cell metrics
//! oracle.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use pheno_core::corpus::Note;
use pheno_core::lexicon::Lexicon;
use pheno_core::{LabelVector, PhenotypeLabel, LABEL_COUNT};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// mock endpoint

pub const TEST_TOKEN: &str = "test-token";

/// What the server saw for one request.
#[derive(Debug, Clone)]
pub struct SeenRequest {
    pub authorization: Option<String>,
    pub body: serde_json::Value,
}

impl SeenRequest {
    pub fn session_id(&self) -> Option<&str> {
        self.body.get("session_id").and_then(|v| v.as_str())
    }

    pub fn messages(&self) -> Vec<(String, String)> {
        self.body["messages"]
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|m| (m["role"].as_str().unwrap_or("").to_string(), m["content"].as_str().unwrap_or("").to_string()))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn system_count(&self) -> usize {
        self.messages().iter().filter(|m| m.0 == "system").count()
    }

    pub fn user_turns(&self) -> Vec<String> {
        self.messages().into_iter().filter(|m| m.0 == "user").map(|m| m.1).collect()
    }
}

/// `(status, body)` for the n-th request (0-based).
pub type Script = dyn Fn(usize, &SeenRequest) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub url: String,
    pub seen: Arc<Mutex<Vec<SeenRequest>>>,
    stop: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(script: Box<Script>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let addr = listener.local_addr().unwrap();
        let seen: Arc<Mutex<Vec<SeenRequest>>> = Arc::default();
        let stop = Arc::new(AtomicBool::new(false));
        let (seen2, stop2) = (seen.clone(), stop.clone());
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let _ = serve_one(stream, &script, &seen2);
            }
        });
        MockServer {
            url: format!("http://{addr}/v1/chat/completions"),
            seen,
            stop,
            addr,
            handle: Some(handle),
        }
    }

    pub fn requests(&self) -> Vec<SeenRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve_one(stream: TcpStream, script: &Script, seen: &Mutex<Vec<SeenRequest>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(());
    }
    let mut length = 0usize;
    let mut authorization = None;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            match k.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = v.trim().parse().unwrap_or(0),
                "authorization" => authorization = Some(v.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let req = SeenRequest {
        authorization,
        body: serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null),
    };
    let n = {
        let mut s = seen.lock().unwrap();
        s.push(req.clone());
        s.len() - 1
    };
    let (status, text) = script(n, &req);
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    out.flush()
}

/// Chat-completion envelope around `content`.
pub fn completion(content: &str) -> String {
    serde_json::json!({
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}]
    })
    .to_string()
}

/// Answer lines marking a label present when its name occurs as a word in
/// the last user turn.
pub fn keyword_answer(req: &SeenRequest) -> String {
    let text = req.user_turns().last().cloned().unwrap_or_default().to_lowercase();
    let words: Vec<&str> = text.split(|c: char| !c.is_alphanumeric()).collect();
    PhenotypeLabel::ALL
        .iter()
        .map(|l| {
            let v = if words.contains(&l.name()) { "mentioned in note" } else { "None" };
            format!("{}: {v}\n", l.display_name())
        })
        .collect()
}

/// Keyword answers, 401 without the expected bearer token.
pub fn keyword_script() -> Box<Script> {
    Box::new(|_, req| {
        if req.authorization.as_deref() != Some(&format!("Bearer {TEST_TOKEN}")) {
            return (401, r#"{"error":"unauthorized"}"#.into());
        }
        (200, completion(&keyword_answer(req)))
    })
}

pub fn set_token() {
    std::env::set_var("PHENO_LLM_TOKEN", TEST_TOKEN);
}

// ---------------------------------------------------------------------------
// planted corpus

/// Two phrases per label, used both as seeds and as planted mentions.
pub const PLANTED: [(PhenotypeLabel, [&str; 2]); LABEL_COUNT] = [
    (PhenotypeLabel::Behavior, ["depressed mood", "anxiety"]),
    (PhenotypeLabel::Cognitive, ["memory loss", "forgetfulness"]),
    (PhenotypeLabel::Eom, ["double vision", "diplopia"]),
    (PhenotypeLabel::Fatigue, ["fatigue", "lack of energy"]),
    (PhenotypeLabel::Gait, ["gait instability", "uses a cane"]),
    (PhenotypeLabel::Hyperreflexia, ["hyperreflexia", "increased reflexes"]),
    (PhenotypeLabel::Hypertonia, ["spasticity", "increased tone"]),
    (PhenotypeLabel::Hyporeflexia, ["areflexia", "decreased reflexes"]),
    (PhenotypeLabel::Sphincter, ["urinary incontinence", "neurogenic bladder"]),
    (PhenotypeLabel::Incoordination, ["ataxia", "dysmetria"]),
    (PhenotypeLabel::On, ["optic neuritis", "pale disk"]),
    (PhenotypeLabel::Pain, ["headache", "burning pain"]),
    (PhenotypeLabel::Paresthesias, ["numbness", "tingling"]),
    (PhenotypeLabel::Seizure, ["seizures", "convulsions"]),
    (PhenotypeLabel::Sleep, ["insomnia", "restless legs"]),
    (PhenotypeLabel::Speech, ["dysarthria", "slurred speech"]),
    (PhenotypeLabel::Tremor, ["tremor", "action tremor"]),
    (PhenotypeLabel::Vision, ["blurry vision", "visual loss"]),
    (PhenotypeLabel::Weakness, ["weakness", "loss of strength"]),
];

const POSITIVE: [&str; 4] = ["Reports {}.", "{} noted on exam today.", "History of {}.", "Patient has {} since the last visit."];
const NEGATED: [&str; 6] = ["No {}.", "Denies {}.", "No sign of {}.", "Without {}.", "{} negative.", "{} absent."];
const FILLER: [&str; 8] = [
    "The patient was seen in clinic today.",
    "Follow up in three months.",
    "Vital signs stable.",
    "MRI reviewed with the patient and family.",
    "Continues current medication regimen.",
    "Lives with spouse and works full time.",
    "Blood pressure was 120 over 80.",
    "Discussed exercise and diet.",
];

pub fn planted_lexicon() -> Lexicon {
    let mut lex = Lexicon::default().with_default_negations();
    for (label, phrases) in PLANTED {
        for p in phrases {
            lex.add_seed(p, label).unwrap();
        }
    }
    lex
}

/// Notes with, per label, about 30% planted positive mentions and 15%
/// negated-only mentions. Returns the notes and their true label vectors.
pub fn planted_corpus(n: usize, seed: u64) -> (Vec<Note>, Vec<LabelVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut notes = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let mut sentences: Vec<String> = Vec::new();
        let mut v = LabelVector::empty();
        for (label, phrases) in PLANTED {
            let r: f64 = rng.random();
            if r < 0.30 {
                v.set(label, true);
                for _ in 0..rng.random_range(1..=2) {
                    let p = phrases[rng.random_range(0..2)];
                    sentences.push(POSITIVE[rng.random_range(0..POSITIVE.len())].replace("{}", p));
                }
            } else if r < 0.45 {
                let p = phrases[rng.random_range(0..2)];
                sentences.push(NEGATED[rng.random_range(0..NEGATED.len())].replace("{}", p));
            }
        }
        for _ in 0..rng.random_range(3..=8) {
            sentences.push(FILLER[rng.random_range(0..FILLER.len())].to_string());
        }
        sentences.shuffle(&mut rng);
        notes.push(Note::new(format!("note{i:04}"), sentences.join(" ")));
        truth.push(v);
    }
    (notes, truth)
}

// ---------------------------------------------------------------------------
// metrics oracle

/// Macro metrics recomputed by visiting every (note, label) cell, with 0/0
/// treated as `zero_division`. Returns [accuracy, precision, recall,
/// specificity, f1].
pub fn brute_force_macro(gold: &[[bool; LABEL_COUNT]], pred: &[[bool; LABEL_COUNT]], zero_division: f64) -> [f64; 5] {
    let div = |a: f64, b: f64| if b == 0.0 { zero_division } else { a / b };
    let mut sums = [0.0; 5];
    for label in 0..LABEL_COUNT {
        let (mut tp, mut fp, mut fneg, mut tn) = (0.0, 0.0, 0.0, 0.0);
        for row in 0..gold.len() {
            let g = gold[row][label];
            let p = pred[row][label];
            if g && p {
                tp += 1.0;
            } else if !g && p {
                fp += 1.0;
            } else if g && !p {
                fneg += 1.0;
            } else {
                tn += 1.0;
            }
        }
        let precision = div(tp, tp + fp);
        let recall = div(tp, tp + fneg);
        let f1 = if precision + recall == 0.0 { zero_division } else { 2.0 * precision * recall / (precision + recall) };
        let vals = [div(tp + tn, gold.len() as f64), precision, recall, div(tn, tn + fp), f1];
        for (s, v) in sums.iter_mut().zip(vals) {
            *s += v;
        }
    }
    sums.map(|s| s / LABEL_COUNT as f64)
}
