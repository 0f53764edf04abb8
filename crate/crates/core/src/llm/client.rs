//! Blocking HTTP client with bearer auth, retry on transient failures, and an
//! optional shared rate limiter.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{ChatRequest, LlmConfig, LlmError};

/// A successful completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    /// The assistant message text.
    pub content: String,
    /// Requests sent, including the successful one.
    pub attempts: u32,
}

#[derive(Deserialize)]
struct Envelope {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

/// Extracts `choices[0].message.content` from a chat-completion body.
pub fn parse_envelope(body: &str) -> Result<String, LlmError> {
    let env: Envelope = serde_json::from_str(body).map_err(|e| LlmError::Protocol(e.to_string()))?;
    env.choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::Protocol("no choices[0].message.content".into()))
}

/// Spaces request starts at least `interval` apart across all holders.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests: f64) -> Self {
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / requests),
            next: Mutex::new(None),
        }
    }

    /// Blocks until the caller's slot.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

enum Attempt {
    Done(String),
    Retry { status: Option<u16>, message: String },
}

pub struct LlmClient<'a> {
    config: LlmConfig,
    token: String,
    agent: ureq::Agent,
    rng: ChaCha8Rng,
    limiter: Option<&'a RateLimiter>,
}

impl<'a> LlmClient<'a> {
    /// Reads the token from the configured environment variable; fails
    /// before any network traffic if it is unset or empty.
    pub fn new(config: &LlmConfig) -> Result<Self, LlmError> {
        Self::with_stream(config, 0, None)
    }

    /// `stream` separates the jitter sequences of parallel workers.
    pub fn with_stream(
        config: &LlmConfig,
        stream: u64,
        limiter: Option<&'a RateLimiter>,
    ) -> Result<Self, LlmError> {
        config.validate()?;
        let token = std::env::var(&config.token_env)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| LlmError::MissingToken(config.token_env.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        Ok(LlmClient {
            config: config.clone(),
            token,
            agent,
            rng,
            limiter,
        })
    }

    /// Delay before retry number `retry` (0-based): `base * 2^retry` plus
    /// uniform jitter in `[0, base)`.
    pub fn backoff(&mut self, retry: u32) -> Duration {
        let base = self.config.backoff_base_ms as f64;
        let exp = base * 2f64.powi(retry.min(30) as i32);
        let jitter = if base > 0.0 { self.rng.random_range(0.0..base) } else { 0.0 };
        Duration::from_secs_f64((exp + jitter) / 1000.0)
    }

    fn attempt(&self, body: &[u8]) -> Result<Attempt, LlmError> {
        if let Some(l) = self.limiter {
            l.acquire();
        }
        let sent = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", format!("Bearer {}", self.token))
            .header("Content-Type", "application/json")
            .send(body);
        let mut resp = match sent {
            Ok(r) => r,
            Err(ureq::Error::Timeout(t)) => {
                return Ok(Attempt::Retry { status: None, message: format!("timeout ({t})") })
            }
            Err(e @ (ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                return Ok(Attempt::Retry { status: None, message: e.to_string() })
            }
            Err(e) => {
                return Err(LlmError::Transport { attempts: 1, last_status: None, message: e.to_string() })
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(t)) => {
                return Ok(Attempt::Retry { status: Some(status), message: format!("timeout ({t})") })
            }
            Err(e) => return Err(LlmError::Protocol(e.to_string())),
        };
        match status {
            200..=299 => Ok(Attempt::Done(text)),
            401 | 403 => Err(LlmError::Auth { status }),
            429 | 500..=599 => Ok(Attempt::Retry { status: Some(status), message: truncate(&text) }),
            _ => Err(LlmError::Http { status, body: truncate(&text) }),
        }
    }

    /// Sends `payload`, retrying 429, 5xx, timeouts and connection failures
    /// up to `max_retries` times.
    pub fn call(&mut self, payload: &ChatRequest) -> Result<Completion, LlmError> {
        let body = serde_json::to_vec(payload).map_err(|e| LlmError::Protocol(e.to_string()))?;
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(Attempt::Done(text)) => {
                    return Ok(Completion { content: parse_envelope(&text)?, attempts });
                }
                Ok(Attempt::Retry { status, message }) => {
                    if attempts > self.config.max_retries {
                        return Err(LlmError::Transport { attempts, last_status: status, message });
                    }
                    let delay = self.backoff(attempts - 1);
                    log::warn!(
                        "transient failure ({}), retry {attempts} in {delay:?}",
                        status.map_or_else(|| message.clone(), |s| format!("HTTP {s}"))
                    );
                    std::thread::sleep(delay);
                }
                Err(LlmError::Transport { message, last_status, .. }) => {
                    return Err(LlmError::Transport { attempts, last_status, message })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn truncate(s: &str) -> String {
    const MAX: usize = 200;
    match s.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}
