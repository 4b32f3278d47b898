use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendProfile, ChatBackend, ChatMessage, Completion, LlmError, SamplingParams, Usage};

const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    top_p: f64,
    frequency_penalty: f64,
    max_tokens: u32,
    stream: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    repetition_penalty: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Done(Completion),
    Retry(String),
    DropRepetitionPenalty,
    Fatal(LlmError),
}

/// Blocking client for an OpenAI-compatible `/chat/completions` endpoint.
///
/// Connection failures, timeouts, HTTP 408/429 and 5xx are retried with
/// exponential backoff. `repetition_penalty` is sent as an extension field;
/// if the server answers 400 without naming a context-length problem, the
/// request is repeated once without it and the field stays off afterwards.
pub struct HttpBackend {
    name: String,
    url: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    max_retries: u32,
    backoff: Duration,
    send_repetition_penalty: AtomicBool,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("name", &self.name)
            .field("url", &self.url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("max_retries", &self.max_retries)
            .finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn from_profile(profile: &BackendProfile) -> Result<Self, LlmError> {
        let api_key = std::env::var(profile.api_key_env_name())
            .ok()
            .filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(profile.timeout())
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            name: profile.name.clone(),
            url: format!("{}/chat/completions", profile.base_url.trim_end_matches('/')),
            model: profile.model_id.clone(),
            api_key,
            client,
            max_retries: profile.max_retries,
            backoff: Duration::from_millis(profile.backoff_ms),
            send_repetition_penalty: AtomicBool::new(true),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.url
    }

    fn attempt(&self, params: &SamplingParams, messages: &[ChatMessage]) -> Attempt {
        let with_penalty = self.send_repetition_penalty.load(Ordering::Relaxed);
        let body = ChatRequest {
            model: &self.model,
            messages,
            temperature: params.temperature,
            top_p: params.top_p,
            frequency_penalty: params.frequency_penalty,
            max_tokens: params.max_tokens,
            stream: false,
            repetition_penalty: with_penalty.then_some(params.repetition_penalty),
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = resp.text().unwrap_or_default();
        match status {
            200..=299 => match parse_response(&text) {
                Ok((content, usage)) => Attempt::Done(Completion {
                    text: content,
                    usage,
                    latency_ms: 0,
                    attempts: 0,
                }),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(LlmError::Auth(format!("HTTP {status}: {text}"))),
            400 | 413 | 422 if mentions_context_length(&text) => {
                Attempt::Fatal(LlmError::ContextLength(text))
            }
            400 | 422 if with_penalty => Attempt::DropRepetitionPenalty,
            408 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}: {text}")),
            _ => Attempt::Fatal(LlmError::Http { status, body: text }),
        }
    }
}

fn parse_response(text: &str) -> Result<(String, Option<Usage>), LlmError> {
    let parsed: ChatResponse =
        serde_json::from_str(text).map_err(|e| LlmError::Protocol(e.to_string()))?;
    let content = parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::Protocol("response has no message content".into()))?;
    Ok((content, parsed.usage))
}

fn mentions_context_length(body: &str) -> bool {
    let b = body.to_ascii_lowercase();
    ["context length", "context_length", "maximum context", "context window", "too many tokens"]
        .iter()
        .any(|needle| b.contains(needle))
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(
        &self,
        params: &SamplingParams,
        messages: &[ChatMessage],
    ) -> Result<Completion, LlmError> {
        let started = Instant::now();
        let mut attempts = 0;
        let mut failures = 0;
        loop {
            attempts += 1;
            match self.attempt(params, messages) {
                Attempt::Done(mut c) => {
                    c.attempts = attempts;
                    c.latency_ms = started.elapsed().as_millis() as u64;
                    return Ok(c);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::DropRepetitionPenalty => {
                    log::warn!(
                        "{}: server rejected the request; retrying without repetition_penalty",
                        self.name
                    );
                    self.send_repetition_penalty.store(false, Ordering::Relaxed);
                }
                Attempt::Retry(message) => {
                    if failures >= self.max_retries {
                        return Err(LlmError::Transport { attempts, message });
                    }
                    let delay = self
                        .backoff
                        .saturating_mul(1 << failures.min(16))
                        .min(MAX_BACKOFF);
                    log::debug!("{}: attempt {attempts} failed ({message}); retrying in {delay:?}", self.name);
                    failures += 1;
                    std::thread::sleep(delay);
                }
            }
        }
    }
}
