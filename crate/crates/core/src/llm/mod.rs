//! Chat-completion gateway: remote endpoint, offline stand-ins, refusal
//! detection, bounded concurrency and a JSON-lines transcript.
//!
//! Transcript lines look like
//!
//! ```json
//! {"mode":"mock","kind":"revision","status":"ok","prompt":"...","response":"...","error":null,"attempts":1,"latency_ms":0.01}
//! ```
//!
//! The API key is read from the environment at request time and never stored
//! in configs, records or logs.

mod mock;
mod remote;

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mock::{frequent_terms, normalize_interests, IdentityModel, MockModel, STOPWORDS};
pub use remote::RemoteModel;

use crate::prompting::{PromptKind, PromptText};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("the model declined the request")]
    Refused { response: String },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("request failed with HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("llm configuration: {0}")]
    Config(String),
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("transcript: {0}")]
    Transcript(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    /// HTTP chat-completions endpoint.
    Remote,
    /// Deterministic tagged echo of the input.
    Mock,
    /// Returns the input post unchanged.
    Identity,
    /// Topic-aware rewriter for synthetic corpora (built by the experiment harness).
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmClientConfig {
    pub mode: LlmMode,
    /// Base URL; `/chat/completions` is appended unless already present.
    pub endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Responses starting with one of these (case-insensitive) are refusals.
    pub refusal_phrases: Vec<String>,
    /// Terms returned by offline interest summaries.
    pub summary_terms: usize,
    pub transcript: Option<PathBuf>,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        Self {
            mode: LlmMode::Mock,
            endpoint: None,
            model: String::new(),
            api_key_env: "LLM_API_KEY".into(),
            temperature: 0.0,
            max_tokens: 512,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            max_in_flight: 4,
            refusal_phrases: ["I cannot", "I can't", "I can not", "I'm sorry", "I am sorry", "As an AI"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            summary_terms: 5,
            transcript: None,
        }
    }
}

/// Outcome of one call to a model, including retries.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelReply {
    pub result: Result<String, LlmError>,
    pub attempts: u32,
}

pub trait ChatModel: Send + Sync {
    fn mode(&self) -> &'static str;

    fn complete(&self, prompt: &str) -> ModelReply;
}

impl LlmClientConfig {
    /// Builds the model for remote, mock and identity modes.
    pub fn build_model(&self) -> Result<Box<dyn ChatModel>, LlmError> {
        match self.mode {
            LlmMode::Remote => Ok(Box::new(RemoteModel::new(self)?)),
            LlmMode::Mock => Ok(Box::new(MockModel::new(self.summary_terms))),
            LlmMode::Identity => Ok(Box::new(IdentityModel::new(self.summary_terms))),
            LlmMode::Oracle => Err(LlmError::Config(
                "oracle mode needs a corpus lexicon; build it through the experiment harness".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub mode: String,
    pub kind: String,
    pub status: String,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
    pub attempts: u32,
    pub latency_ms: f64,
}

struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Wraps a [`ChatModel`] with refusal detection, a concurrency bound and the
/// transcript writer. Safe to share across threads.
pub struct LlmGateway {
    model: Box<dyn ChatModel>,
    refusal_phrases: Vec<String>,
    slots: Slots,
    transcript: Option<Mutex<BufWriter<File>>>,
}

impl LlmGateway {
    pub fn new(model: Box<dyn ChatModel>, config: &LlmClientConfig) -> Result<Self, LlmError> {
        let transcript = match &config.transcript {
            Some(path) => Some(Mutex::new(BufWriter::new(open_transcript(path)?))),
            None => None,
        };
        Ok(Self {
            model,
            refusal_phrases: config.refusal_phrases.iter().map(|p| p.to_lowercase()).collect(),
            slots: Slots {
                free: Mutex::new(config.max_in_flight.max(1)),
                cv: Condvar::new(),
            },
            transcript,
        })
    }

    pub fn from_config(config: &LlmClientConfig) -> Result<Self, LlmError> {
        Self::new(config.build_model()?, config)
    }

    pub fn mode(&self) -> &'static str {
        self.model.mode()
    }

    fn is_refusal(&self, response: &str) -> bool {
        let r = response.trim().to_lowercase();
        r.is_empty() || self.refusal_phrases.iter().any(|p| r.starts_with(p.as_str()))
    }

    /// Sends one prompt. The transcript record is flushed before returning.
    pub fn complete(&self, prompt: &PromptText) -> Result<String, LlmError> {
        if prompt.text.trim().is_empty() {
            return Err(LlmError::EmptyPrompt);
        }
        let start = Instant::now();
        let reply = {
            let _slot = self.slots.acquire();
            self.model.complete(&prompt.text)
        };
        let latency_ms = start.elapsed().as_secs_f64() * 1e3;
        let result = match reply.result {
            Ok(text) if self.is_refusal(&text) => Err(LlmError::Refused { response: text }),
            other => other,
        };
        let (status, response, error) = match &result {
            Ok(text) => ("ok", Some(text.clone()), None),
            Err(LlmError::Refused { response }) => ("refused", Some(response.clone()), None),
            Err(e) => ("error", None, Some(e.to_string())),
        };
        let record = CompletionRecord {
            mode: self.model.mode().to_string(),
            kind: match prompt.kind {
                PromptKind::Revision(k) => format!("revision:{k}"),
                PromptKind::InterestSummarization => "interest_summarization".into(),
            },
            status: status.into(),
            prompt: prompt.text.clone(),
            response,
            error,
            attempts: reply.attempts,
            latency_ms,
        };
        self.persist(&record)?;
        result
    }

    /// Runs an interest-summarization prompt and normalizes the answer to
    /// `term; term; ...`.
    pub fn summarize_interests(&self, prompt: &PromptText) -> Result<String, LlmError> {
        let raw = self.complete(prompt)?;
        let normalized = normalize_interests(&raw);
        if normalized.is_empty() {
            return Err(LlmError::Refused { response: raw });
        }
        Ok(normalized)
    }

    fn persist(&self, record: &CompletionRecord) -> Result<(), LlmError> {
        let Some(writer) = &self.transcript else {
            return Ok(());
        };
        let line = serde_json::to_string(record).map_err(|e| LlmError::Transcript(e.to_string()))?;
        let mut w = writer.lock().expect("transcript lock");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| LlmError::Transcript(e.to_string()))
    }
}

fn open_transcript(path: &Path) -> Result<File, LlmError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| LlmError::Transcript(format!("{}: {e}", parent.display())))?;
    }
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))
}
