//! Helpers for driving the `pheno` binary: process runner, a small
//! synthetic corpus with known labels, and a keyword-answering
//! chat-completion server.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use pheno_core::lexicon::Lexicon;
use pheno_core::{LabelVector, PhenotypeLabel};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// The `ERROR ...` line, if any.
    pub fn error_line(&self) -> Option<&str> {
        self.stderr.lines().find(|l| l.starts_with("ERROR "))
    }

    pub fn assert_ok(&self) {
        assert_eq!(self.code, 0, "stderr: {}", self.stderr);
    }
}

pub fn pheno_with_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pheno"));
    cmd.args(args).env_remove("PHENO_LLM_TOKEN").env_remove("RUST_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().expect("run pheno");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

pub fn pheno(args: &[&str]) -> Run {
    pheno_with_env(args, &[])
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

// ---------------------------------------------------------------------------
// synthetic corpus

pub const PLANTED: [(PhenotypeLabel, &str); 6] = [
    (PhenotypeLabel::Weakness, "weakness"),
    (PhenotypeLabel::Gait, "gait instability"),
    (PhenotypeLabel::Pain, "headache"),
    (PhenotypeLabel::Tremor, "tremor"),
    (PhenotypeLabel::Fatigue, "fatigue"),
    (PhenotypeLabel::Paresthesias, "numbness"),
];

const FILLER: [&str; 5] = [
    "Seen in clinic today.",
    "Follow up in three months.",
    "MRI reviewed with the patient.",
    "Continues current medication.",
    "Vital signs stable.",
];

/// xorshift, so the fixture needs no RNG crate.
struct Xs(u64);

impl Xs {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

/// Notes mentioning planted phrases (about 35% each) or their negations
/// (about 15%), with the true label vectors.
pub fn synthetic_notes(n: usize, seed: u64) -> Vec<(String, String, LabelVector)> {
    let mut rng = Xs(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1);
    (0..n)
        .map(|i| {
            let mut sentences = Vec::new();
            let mut v = LabelVector::empty();
            for (label, phrase) in PLANTED {
                let r = rng.below(100);
                if r < 35 {
                    v.set(label, true);
                    sentences.push(format!("Patient reports {phrase}."));
                } else if r < 50 {
                    sentences.push(format!("No sign of {phrase}."));
                }
            }
            for _ in 0..3 {
                sentences.push(FILLER[rng.below(FILLER.len() as u64) as usize].to_string());
            }
            let k = sentences.len() as u64;
            for j in (1..k).rev() {
                sentences.swap(j as usize, rng.below(j + 1) as usize);
            }
            (format!("n{i:03}"), sentences.join(" "), v)
        })
        .collect()
}

/// Raw CSV with non-default column names `id,body,clinic`.
pub fn write_raw_csv(path: &Path, notes: &[(String, String, LabelVector)]) {
    let mut s = String::from("id,body,clinic\n");
    for (id, text, _) in notes {
        s.push_str(&format!("{id},\"{}\",neuro\n", text.replace('"', "\"\"")));
    }
    std::fs::write(path, s).unwrap();
}

pub fn write_truth_csv(path: &Path, notes: &[(String, String, LabelVector)]) {
    let mut s = String::from("note_id");
    for l in PhenotypeLabel::ALL {
        s.push(',');
        s.push_str(l.name());
    }
    s.push('\n');
    for (id, _, v) in notes {
        s.push_str(id);
        for b in v.0 {
            s.push_str(if b { ",1" } else { ",0" });
        }
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

pub fn planted_lexicon() -> Lexicon {
    let mut lex = Lexicon::default().with_default_negations();
    for (label, phrase) in PLANTED {
        lex.add_seed(phrase, label).unwrap();
    }
    lex
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

// ---------------------------------------------------------------------------
// mock chat-completion endpoint

pub const TOKEN: &str = "cli-test-token";

/// Answers each request with a keyword-derived phenotype list; 401 without
/// the expected bearer token. `fail_first` requests get 429 first.
pub struct MockLlm {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
    handle: Option<JoinHandle<()>>,
}

impl MockLlm {
    pub fn start(fail_first: usize) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let (count, halt) = (requests.clone(), stop.clone());
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if halt.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(s) = stream {
                    let n = count.fetch_add(1, Ordering::SeqCst);
                    let _ = answer(s, n < fail_first);
                }
            }
        });
        MockLlm {
            url: format!("http://{addr}/v1/chat/completions"),
            requests,
            stop,
            addr,
            handle: Some(handle),
        }
    }
}

impl Drop for MockLlm {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn answer(stream: TcpStream, throttle: bool) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    let (mut length, mut auth) = (0usize, String::new());
    reader.read_line(&mut line)?;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            match k.to_ascii_lowercase().as_str() {
                "content-length" => length = v.trim().parse().unwrap_or(0),
                "authorization" => auth = v.trim().to_string(),
                _ => {}
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let (status, text) = if auth != format!("Bearer {TOKEN}") {
        (401, r#"{"error":"unauthorized"}"#.to_string())
    } else if throttle {
        (429, r#"{"error":"slow down"}"#.to_string())
    } else {
        let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
        let note = req["messages"]
            .as_array()
            .and_then(|m| m.iter().rev().find(|x| x["role"] == "user"))
            .and_then(|x| x["content"].as_str())
            .unwrap_or("")
            .to_lowercase();
        let content: String = PhenotypeLabel::ALL
            .iter()
            .map(|l| {
                let hit = PLANTED
                    .iter()
                    .any(|(pl, phrase)| pl == l && note.contains(&format!("reports {phrase}")));
                format!("{}: {}\n", l.display_name(), if hit { "present" } else { "None" })
            })
            .collect();
        let env = serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]});
        (200, env.to_string())
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    out.flush()
}
