use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, Completion, LlmError, SamplingParams};

/// Simulated failure for a script entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptFailure {
    Transport,
    Auth,
    ContextLength,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    #[serde(default)]
    response: Option<String>,
    #[serde(default)]
    expects: Option<OneOrMany>,
    #[serde(default)]
    fail: Option<ScriptFailure>,
}

/// One scripted reply. `expects` lists substrings the incoming prompt
/// (all messages joined) must contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub outcome: Result<String, ScriptFailure>,
    pub expects: Vec<String>,
}

impl ScriptEntry {
    pub fn respond(text: impl Into<String>) -> Self {
        Self {
            outcome: Ok(text.into()),
            expects: Vec::new(),
        }
    }

    pub fn fail(failure: ScriptFailure) -> Self {
        Self {
            outcome: Err(failure),
            expects: Vec::new(),
        }
    }

    pub fn expecting(mut self, needle: impl Into<String>) -> Self {
        self.expects.push(needle.into());
        self
    }
}

/// Replays script entries in order, one per call.
#[derive(Debug)]
pub struct ScriptedBackend {
    name: String,
    entries: Vec<ScriptEntry>,
    cursor: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self {
            name: "scripted".into(),
            entries,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_responses<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(responses.into_iter().map(ScriptEntry::respond).collect())
    }

    /// Parses a JSONL script: one `{"response": ..., "expects": ...}` or
    /// `{"fail": "transport" | "auth" | "context_length"}` object per line.
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawEntry =
                serde_json::from_str(line).map_err(|e| LlmError::MalformedScript {
                    line: line_no,
                    message: e.to_string(),
                })?;
            let outcome = match (raw.response, raw.fail) {
                (Some(r), None) => Ok(r),
                (None, Some(f)) => Err(f),
                _ => {
                    return Err(LlmError::MalformedScript {
                        line: line_no,
                        message: "entry needs exactly one of `response` or `fail`".into(),
                    })
                }
            };
            let expects = match raw.expects {
                None => Vec::new(),
                Some(OneOrMany::One(s)) => vec![s],
                Some(OneOrMany::Many(v)) => v,
            };
            entries.push(ScriptEntry { outcome, expects });
        }
        if entries.is_empty() {
            return Err(LlmError::MalformedScript {
                line: 0,
                message: "script has no entries".into(),
            });
        }
        Ok(Self::new(entries))
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries consumed so far.
    pub fn calls(&self) -> usize {
        *self.cursor.lock().expect("cursor lock")
    }
}

pub fn load_script(path: impl AsRef<Path>) -> Result<ScriptedBackend, LlmError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    ScriptedBackend::parse(&text)
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(
        &self,
        _params: &SamplingParams,
        messages: &[ChatMessage],
    ) -> Result<Completion, LlmError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let index = *cursor;
        let entry = self
            .entries
            .get(index)
            .ok_or(LlmError::ScriptExhausted { calls: index })?;
        *cursor += 1;

        let prompt: String = messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        if let Some(missing) = entry.expects.iter().find(|e| !prompt.contains(e.as_str())) {
            return Err(LlmError::ScriptMismatch {
                call_index: index,
                expected: missing.clone(),
            });
        }

        match &entry.outcome {
            Ok(text) => Ok(Completion {
                text: text.clone(),
                usage: None,
                latency_ms: 0,
                attempts: 1,
            }),
            Err(ScriptFailure::Transport) => Err(LlmError::Transport {
                attempts: 1,
                message: format!("scripted transport failure at entry {index}"),
            }),
            Err(ScriptFailure::Auth) => Err(LlmError::Auth(format!(
                "scripted auth failure at entry {index}"
            ))),
            Err(ScriptFailure::ContextLength) => Err(LlmError::ContextLength(format!(
                "scripted context-length failure at entry {index}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msgs(user: &str) -> Vec<ChatMessage> {
        vec![ChatMessage::system("sys"), ChatMessage::user(user)]
    }

    #[test]
    fn queue_semantics() {
        let b = ScriptedBackend::from_responses(["r1", "r2"]);
        let p = SamplingParams::default();
        assert_eq!(b.complete(&p, &msgs("a")).unwrap().text, "r1");
        assert_eq!(b.complete(&p, &msgs("a")).unwrap().text, "r2");
        assert_eq!(
            b.complete(&p, &msgs("a")),
            Err(LlmError::ScriptExhausted { calls: 2 })
        );
    }

    #[test]
    fn expects_are_checked() {
        let b = ScriptedBackend::parse(
            "{\"response\": \"ok\", \"expects\": \"## Article\"}\n{\"response\": \"two\", \"expects\": [\"a\", \"zz\"]}\n",
        )
        .unwrap();
        let p = SamplingParams::default();
        assert_eq!(
            b.complete(&p, &msgs("no heading here")),
            Err(LlmError::ScriptMismatch {
                call_index: 0,
                expected: "## Article".into()
            })
        );
        assert_eq!(
            b.complete(&p, &msgs("a")),
            Err(LlmError::ScriptMismatch {
                call_index: 1,
                expected: "zz".into()
            })
        );
    }

    #[test]
    fn load_single_entry_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        std::fs::write(&path, "{\"response\": \"only\"}\n").unwrap();
        let b = load_script(&path).unwrap();
        assert_eq!(b.len(), 1);
        let p = SamplingParams::default();
        assert_eq!(b.complete(&p, &msgs("x")).unwrap().text, "only");
        assert!(matches!(
            b.complete(&p, &msgs("x")),
            Err(LlmError::ScriptExhausted { .. })
        ));
    }

    #[test]
    fn malformed_scripts() {
        assert!(matches!(
            ScriptedBackend::parse(""),
            Err(LlmError::MalformedScript { line: 0, .. })
        ));
        assert!(matches!(
            ScriptedBackend::parse("{\"response\": \"a\"}\nnot json\n"),
            Err(LlmError::MalformedScript { line: 2, .. })
        ));
        assert!(matches!(
            ScriptedBackend::parse("{\"response\": \"a\", \"fail\": \"auth\"}"),
            Err(LlmError::MalformedScript { line: 1, .. })
        ));
        assert!(matches!(
            ScriptedBackend::parse("{\"reply\": \"a\"}"),
            Err(LlmError::MalformedScript { line: 1, .. })
        ));
        assert!(matches!(
            load_script("/nonexistent/script.jsonl"),
            Err(LlmError::File { .. })
        ));
    }

    #[test]
    fn scripted_failures() {
        let b = ScriptedBackend::parse(
            "{\"fail\": \"transport\"}\n{\"fail\": \"auth\"}\n{\"fail\": \"context_length\"}\n",
        )
        .unwrap();
        let p = SamplingParams::default();
        assert!(matches!(b.complete(&p, &msgs("x")), Err(LlmError::Transport { .. })));
        assert!(matches!(b.complete(&p, &msgs("x")), Err(LlmError::Auth(_))));
        assert!(matches!(b.complete(&p, &msgs("x")), Err(LlmError::ContextLength(_))));
        assert_eq!(b.calls(), 3);
    }
}
