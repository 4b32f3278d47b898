//! Chat-completion backends.
//!
//! [`HttpBackend`] talks to any OpenAI-compatible `/chat/completions`
//! endpoint. [`ScriptedBackend`] replays a fixed list of responses and is what
//! the tests and examples run against.

mod http;
mod scripted;
#[cfg(test)]
mod testserver;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use scripted::{load_script, ScriptEntry, ScriptFailure, ScriptedBackend};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("prompt exceeds the model context length: {0}")]
    ContextLength(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("script exhausted after {calls} call(s)")]
    ScriptExhausted { calls: usize },
    #[error("script entry {call_index} expected the prompt to contain {expected:?}")]
    ScriptMismatch { call_index: usize, expected: String },
    #[error("malformed script (line {line}): {message}")]
    MalformedScript { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

impl LlmError {
    /// Errors that stem from the endpoint or its credentials rather than
    /// from model output.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            LlmError::Transport { .. } | LlmError::Auth(_) | LlmError::Http { .. }
        )
    }
}

/// Sampling settings sent with every request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub repetition_penalty: f64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.7,
            top_p: 0.4,
            frequency_penalty: 1.0,
            repetition_penalty: 1.0,
            max_tokens: 4096,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=1.0).contains(&self.top_p) {
            return Err(LlmError::InvalidRequest(format!(
                "top_p must be in [0, 1], got {}",
                self.top_p
            )));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::InvalidRequest(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: MessageRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: MessageRole::User,
            content: content.into(),
        }
    }
}

/// Token usage as reported by the server, not normalized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
    /// Wall-clock time across all attempts; always 0 for scripted backends.
    pub latency_ms: u64,
    pub attempts: u32,
}

pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(
        &self,
        params: &SamplingParams,
        messages: &[ChatMessage],
    ) -> Result<Completion, LlmError>;
}

/// Checks the request shape, then delegates to `backend`.
pub fn complete(
    backend: &dyn ChatBackend,
    params: &SamplingParams,
    messages: &[ChatMessage],
) -> Result<Completion, LlmError> {
    match messages.first() {
        None => return Err(LlmError::InvalidRequest("no messages".into())),
        Some(m) if m.role != MessageRole::System => {
            return Err(LlmError::InvalidRequest(
                "first message must be the system prompt".into(),
            ))
        }
        Some(_) => {}
    }
    params.validate()?;
    backend.complete(params, messages)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Scripted,
}

fn default_timeout_secs() -> u64 {
    300
}

fn default_max_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

/// A named endpoint. HTTP profiles need `base_url` and `model_id`; scripted
/// profiles need `script_path`, which may be a file or a directory holding
/// one `<doc_id>.jsonl` script per document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendProfile {
    #[serde(default)]
    pub name: String,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub base_url: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub model_id: String,
    /// Environment variable holding the bearer token. Defaults to
    /// `<NAME>_API_KEY`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<PathBuf>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

impl BackendProfile {
    pub fn http(name: &str, base_url: &str, model_id: &str) -> Self {
        Self {
            name: name.to_string(),
            kind: BackendKind::Http,
            base_url: base_url.to_string(),
            model_id: model_id.to_string(),
            api_key_env: None,
            script_path: None,
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
        }
    }

    pub fn scripted(name: &str, script_path: impl Into<PathBuf>) -> Self {
        Self {
            name: name.to_string(),
            kind: BackendKind::Scripted,
            base_url: String::new(),
            model_id: String::new(),
            api_key_env: None,
            script_path: Some(script_path.into()),
            timeout_secs: default_timeout_secs(),
            max_retries: 0,
            backoff_ms: 0,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn api_key_env_name(&self) -> String {
        self.api_key_env.clone().unwrap_or_else(|| {
            let stem: String = self
                .name
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() {
                        c.to_ascii_uppercase()
                    } else {
                        '_'
                    }
                })
                .collect();
            format!("{stem}_API_KEY")
        })
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        match self.kind {
            BackendKind::Http => {
                if self.base_url.trim().is_empty() || self.model_id.trim().is_empty() {
                    return Err(LlmError::Config(format!(
                        "http profile {:?} needs base_url and model_id",
                        self.name
                    )));
                }
            }
            BackendKind::Scripted => match &self.script_path {
                Some(p) if p.exists() => {}
                Some(p) => {
                    return Err(LlmError::Config(format!(
                        "scripted profile {:?}: {} does not exist",
                        self.name,
                        p.display()
                    )))
                }
                None => {
                    return Err(LlmError::Config(format!(
                        "scripted profile {:?} needs script_path",
                        self.name
                    )))
                }
            },
        }
        Ok(())
    }

    /// Builds the backend for one document. Scripted profiles pointing at a
    /// directory load `<doc_id>.jsonl` from it.
    pub fn connect(&self, doc_id: &str) -> Result<Arc<dyn ChatBackend>, LlmError> {
        self.validate()?;
        match self.kind {
            BackendKind::Http => Ok(Arc::new(HttpBackend::from_profile(self)?)),
            BackendKind::Scripted => {
                let path = self.script_path.as_ref().expect("validated");
                let file = if path.is_dir() {
                    path.join(format!("{doc_id}.jsonl"))
                } else {
                    path.clone()
                };
                let mut backend = load_script(&file)?;
                backend.set_name(&self.name);
                Ok(Arc::new(backend))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_defaults() {
        let p = SamplingParams::default();
        assert_eq!(p.top_p, 0.4);
        assert_eq!(p.frequency_penalty, 1.0);
        assert_eq!(p.repetition_penalty, 1.0);
        assert_eq!(p.max_tokens, 4096);
        assert_eq!(p.temperature, 0.7);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn sampling_invariants() {
        let bad = [
            SamplingParams {
                top_p: 1.5,
                ..Default::default()
            },
            SamplingParams {
                temperature: -0.1,
                ..Default::default()
            },
            SamplingParams {
                max_tokens: 0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(LlmError::InvalidRequest(_))));
        }
    }

    #[test]
    fn request_shape_is_checked() {
        let backend = ScriptedBackend::from_responses(["r"]);
        let params = SamplingParams::default();
        assert!(matches!(
            complete(&backend, &params, &[]),
            Err(LlmError::InvalidRequest(_))
        ));
        assert!(matches!(
            complete(&backend, &params, &[ChatMessage::user("hi")]),
            Err(LlmError::InvalidRequest(_))
        ));
        let out = complete(
            &backend,
            &params,
            &[ChatMessage::system("s"), ChatMessage::user("u")],
        )
        .unwrap();
        assert_eq!(out.text, "r");
    }

    #[test]
    fn profile_validation_and_key_names() {
        let p = BackendProfile::http("qwen-7b", "http://localhost:8000/v1", "m");
        assert!(p.validate().is_ok());
        assert_eq!(p.api_key_env_name(), "QWEN_7B_API_KEY");
        assert!(BackendProfile::http("x", "", "m").validate().is_err());
        assert!(BackendProfile::scripted("s", "/nonexistent/script.jsonl")
            .validate()
            .is_err());
    }

    #[test]
    fn profile_from_toml() {
        let p: BackendProfile = toml::from_str(
            "kind = \"http\"\nbase_url = \"http://h/v1\"\nmodel_id = \"m\"\napi_key_env = \"K\"\n",
        )
        .unwrap();
        assert_eq!(p.kind, BackendKind::Http);
        assert_eq!(p.max_retries, 3);
        assert_eq!(p.api_key_env_name(), "K");
    }
}
