//! The write → read → suggest → revise loop.
//!
//! [`run_pipeline`] drives one document through `t` iterations. Every model
//! call, including failed ones and parse retries, is kept in the returned
//! [`PipelineTrace`], so a run can be audited or scored after the fact.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentsError, PromptBundle, PromptSet, PROMPT_SET_VERSION};
use crate::llmclient::{self, BackendProfile, ChatBackend, ChatMessage, LlmError, SamplingParams, Usage};
use crate::mdextract::{self, EditorFeedback, ParseError, ReadingNotes, Revision};
use crate::model::{Article, Document, Role, TemplateId};
use crate::textmetrics::{readability_report, tokenize_words, FamiliarWordList, MetricsError, ReadabilityReport};

/// Which collaboration steps run inside each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Reader notes, editor advice, revision.
    #[default]
    Full,
    /// Editor advises from the draft alone; no reader call.
    NoNotes,
    /// Journalist revises from the reader notes; no editor call.
    NoSuggestions,
    /// Journalist revises its own draft with no other input.
    NoCollaboration,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Full,
        Mode::NoNotes,
        Mode::NoSuggestions,
        Mode::NoCollaboration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::NoNotes => "no-notes",
            Mode::NoSuggestions => "no-suggestions",
            Mode::NoCollaboration => "no-collaboration",
        }
    }

    pub fn required_roles(self) -> &'static [Role] {
        match self {
            Mode::Full => &[Role::Journalist, Role::Reader, Role::Editor],
            Mode::NoNotes => &[Role::Journalist, Role::Editor],
            Mode::NoSuggestions => &[Role::Journalist, Role::Reader],
            Mode::NoCollaboration => &[Role::Journalist],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (expected full, no-notes, no-suggestions or no-collaboration)"))
    }
}

/// Binds a role to a named backend profile and its sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleConfig {
    pub role: Role,
    pub endpoint_ref: String,
    #[serde(default)]
    pub sampling: SamplingParams,
}

impl RoleConfig {
    pub fn new(role: Role, endpoint_ref: impl Into<String>) -> Self {
        Self {
            role,
            endpoint_ref: endpoint_ref.into(),
            sampling: SamplingParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub iterations: usize,
    pub select_k: usize,
    pub mode: Mode,
    pub role_configs: Vec<RoleConfig>,
    pub parse_retry_limit: usize,
}

impl Default for PipelineConfig {
    /// Five iterations, keep the third, all roles on one endpoint named `default`.
    fn default() -> Self {
        Self {
            iterations: 5,
            select_k: 3,
            mode: Mode::Full,
            role_configs: Role::ALL
                .into_iter()
                .map(|r| RoleConfig::new(r, "default"))
                .collect(),
            parse_retry_limit: 2,
        }
    }
}

impl PipelineConfig {
    /// Same role bindings with a different loop length; `select_k` is clamped to `t`.
    pub fn with_iterations(mut self, t: usize) -> Self {
        self.iterations = t;
        self.select_k = self.select_k.min(t);
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn role_config(&self, role: Role) -> Option<&RoleConfig> {
        self.role_configs.iter().find(|rc| rc.role == role)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.select_k > self.iterations {
            return Err(ConfigError::SelectOutOfRange {
                k: self.select_k,
                t: self.iterations,
            });
        }
        for (i, rc) in self.role_configs.iter().enumerate() {
            if self.role_configs[..i].iter().any(|o| o.role == rc.role) {
                return Err(ConfigError::DuplicateRole(rc.role));
            }
            if rc.endpoint_ref.trim().is_empty() {
                return Err(ConfigError::EmptyEndpoint(rc.role));
            }
            rc.sampling
                .validate()
                .map_err(|e| ConfigError::Sampling(rc.role, e.to_string()))?;
        }
        for &role in self.mode.required_roles() {
            if self.role_config(role).is_none() {
                return Err(ConfigError::MissingRole {
                    role,
                    mode: self.mode,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("select_k = {k} is outside 0..={t}")]
    SelectOutOfRange { k: usize, t: usize },
    #[error("role {0} is configured twice")]
    DuplicateRole(Role),
    #[error("role {0} has an empty endpoint reference")]
    EmptyEndpoint(Role),
    #[error("mode {mode} needs a {role} configuration")]
    MissingRole { role: Role, mode: Mode },
    #[error("sampling settings for {0}: {1}")]
    Sampling(Role, String),
    #[error("role {role} refers to unknown profile {profile:?}")]
    UnknownProfile { role: Role, profile: String },
    #[error("no backend bound to role {0}")]
    MissingBackend(Role),
}

/// Backend instance per role. Roles bound to the same profile share one
/// instance, so a single scripted backend sees calls in pipeline order.
#[derive(Clone, Default)]
pub struct RoleBackends {
    map: BTreeMap<Role, Arc<dyn ChatBackend>>,
}

impl fmt::Debug for RoleBackends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.map.iter().map(|(r, b)| (r, b.name())))
            .finish()
    }
}

impl RoleBackends {
    pub fn new() -> Self {
        Self::default()
    }

    /// One backend for every role.
    pub fn shared(backend: Arc<dyn ChatBackend>) -> Self {
        let mut out = Self::new();
        for role in Role::ALL {
            out.map.insert(role, Arc::clone(&backend));
        }
        out
    }

    pub fn with(mut self, role: Role, backend: Arc<dyn ChatBackend>) -> Self {
        self.map.insert(role, backend);
        self
    }

    pub fn get(&self, role: Role) -> Option<&Arc<dyn ChatBackend>> {
        self.map.get(&role)
    }

    /// Connects every role the mode needs, one backend per distinct profile.
    pub fn connect(
        cfg: &PipelineConfig,
        profiles: &BTreeMap<String, BackendProfile>,
        doc_id: &str,
    ) -> Result<Self, ConnectError> {
        let mut by_profile: BTreeMap<&str, Arc<dyn ChatBackend>> = BTreeMap::new();
        let mut out = Self::new();
        for &role in cfg.mode.required_roles() {
            let rc = cfg
                .role_config(role)
                .ok_or(ConfigError::MissingRole { role, mode: cfg.mode })?;
            let name = rc.endpoint_ref.as_str();
            let backend = match by_profile.get(name) {
                Some(b) => Arc::clone(b),
                None => {
                    let profile = profiles.get(name).ok_or_else(|| ConfigError::UnknownProfile {
                        role,
                        profile: name.to_string(),
                    })?;
                    let mut profile = profile.clone();
                    if profile.name.is_empty() {
                        profile.name = name.to_string();
                    }
                    let b = profile.connect(doc_id)?;
                    by_profile.insert(name, Arc::clone(&b));
                    b
                }
            };
            out.map.insert(role, backend);
        }
        Ok(out)
    }
}

#[derive(Debug, Error)]
pub enum ConnectError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

/// What a call's response was parsed into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParsedOutput {
    Article { text: String },
    Notes(ReadingNotes),
    Feedback(EditorFeedback),
    Revision(Revision),
}

/// One request/response exchange. Parse retries and context-length retries
/// each get their own record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub role: Role,
    pub template_id: TemplateId,
    pub iteration: usize,
    pub backend: String,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated_input: bool,
    pub response: Option<String>,
    pub error: Option<String>,
    pub parsed: Option<ParsedOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    pub latency_ms: u64,
    pub attempts: u32,
}

impl CallRecord {
    pub fn succeeded(&self) -> bool {
        self.parsed.is_some()
    }
}

/// Everything one document's run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub doc: Document,
    pub config: PipelineConfig,
    pub prompt_set_version: String,
    /// `drafts[i]` is iteration `i`; a finished run has `t + 1` drafts.
    pub drafts: Vec<Article>,
    /// Reader notes, one per iteration that ran a reader.
    pub notes: Vec<ReadingNotes>,
    /// Editor feedback, one per iteration that ran an editor.
    pub feedback: Vec<EditorFeedback>,
    pub call_records: Vec<CallRecord>,
    /// Filled by [`score_trace`]; one per draft.
    #[serde(default)]
    pub reports: Vec<ReadabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl PipelineTrace {
    fn start(doc: &Document, cfg: &PipelineConfig) -> Self {
        Self {
            doc: doc.clone(),
            config: cfg.clone(),
            prompt_set_version: PROMPT_SET_VERSION.to_string(),
            drafts: Vec::new(),
            notes: Vec::new(),
            feedback: Vec::new(),
            call_records: Vec::new(),
            reports: Vec::new(),
            failure: None,
        }
    }

    pub fn iterations(&self) -> usize {
        self.config.iterations
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.drafts.len() == self.config.iterations + 1
    }

    /// Template ids of the successful calls, in order.
    pub fn call_sequence(&self) -> Vec<TemplateId> {
        self.call_records
            .iter()
            .filter(|c| c.succeeded())
            .map(|c| c.template_id)
            .collect()
    }

    pub fn count_calls(&self, template: TemplateId) -> usize {
        self.call_sequence().iter().filter(|&&t| t == template).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `{root}/{dataset}/{doc_id}.trace`
    pub fn path_in(&self, root: &Path) -> PathBuf {
        root.join(self.doc.dataset.as_str())
            .join(format!("{}.trace", file_stem(&self.doc.id)))
    }

    pub fn save(&self, root: &Path) -> Result<PathBuf, TraceFileError> {
        let path = self.path_in(root);
        let io = |e: std::io::Error| TraceFileError::Io {
            path: path.clone(),
            message: e.to_string(),
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        std::fs::write(&path, self.to_json()).map_err(io)?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TraceFileError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| TraceFileError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Maps a document id onto a safe file name.
pub fn file_stem(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    match s.trim_start_matches('.') {
        "" => "_".to_string(),
        rest => rest.to_string(),
    }
}

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: not a trace file: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum PipelineFailure {
    #[error("invalid pipeline config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage} prompt at iteration {iteration}: {source}")]
    Prompt {
        stage: TemplateId,
        iteration: usize,
        source: AgentsError,
    },
    #[error("{stage} output at iteration {iteration} failed to parse after {attempts} attempt(s): {source}")]
    Parse {
        stage: TemplateId,
        iteration: usize,
        attempts: usize,
        source: ParseError,
    },
    #[error("{stage} call at iteration {iteration}: {source}")]
    Backend {
        stage: TemplateId,
        iteration: usize,
        source: LlmError,
    },
}

/// A failed run. `trace` holds every call made before the failure.
#[derive(Debug, Error)]
#[error("document {}: {kind}", trace.doc.id)]
pub struct PipelineError {
    pub kind: PipelineFailure,
    pub trace: Box<PipelineTrace>,
}

impl PipelineError {
    /// True for endpoint, transport and credential failures.
    pub fn is_backend_failure(&self) -> bool {
        matches!(&self.kind, PipelineFailure::Backend { source, .. } if source.is_backend_failure())
    }
}

enum Step<'a> {
    Write,
    Read(&'a Article),
    Suggest(&'a Article, &'a ReadingNotes),
    SuggestNoNotes(&'a Article),
    Revise(&'a Article, &'a [String]),
    ReviseNotes(&'a Article, &'a ReadingNotes),
    RevisePlain(&'a Article),
}

impl Step<'_> {
    fn template(&self) -> TemplateId {
        match self {
            Step::Write => TemplateId::Write,
            Step::Read(_) => TemplateId::Read,
            Step::Suggest(..) | Step::SuggestNoNotes(_) => TemplateId::Suggest,
            Step::Revise(..) | Step::ReviseNotes(..) | Step::RevisePlain(_) => TemplateId::Revise,
        }
    }

    fn draft(&self) -> Option<&Article> {
        match self {
            Step::Write => None,
            Step::Read(a)
            | Step::Suggest(a, _)
            | Step::SuggestNoNotes(a)
            | Step::Revise(a, _)
            | Step::ReviseNotes(a, _)
            | Step::RevisePlain(a) => Some(a),
        }
    }

    fn render(
        &self,
        prompts: &PromptSet,
        doc: &Document,
        shortened: Option<&Article>,
    ) -> Result<PromptBundle, AgentsError> {
        let d = |a: &Article| -> Article { shortened.cloned().unwrap_or_else(|| a.clone()) };
        match self {
            Step::Write => prompts.render_write(doc),
            Step::Read(a) => prompts.render_read(&d(a)),
            Step::Suggest(a, n) => prompts.render_suggest(doc, &d(a), n),
            Step::SuggestNoNotes(a) => prompts.render_suggest_without_notes(doc, &d(a)),
            Step::Revise(a, advice) => prompts.render_revise(doc, &d(a), advice),
            Step::ReviseNotes(a, n) => prompts.render_revise_with_notes(doc, &d(a), n),
            Step::RevisePlain(a) => prompts.render_revise_plain(doc, &d(a)),
        }
    }

    fn parse(&self, raw: &str) -> Result<ParsedOutput, ParseError> {
        match self.template() {
            TemplateId::Write => {
                let text = mdextract::parse_article(raw)?;
                require_words(&text, "Article")?;
                Ok(ParsedOutput::Article { text })
            }
            TemplateId::Read => mdextract::parse_notes(raw).map(ParsedOutput::Notes),
            TemplateId::Suggest => mdextract::parse_feedback(raw).map(ParsedOutput::Feedback),
            TemplateId::Revise => {
                let rev = mdextract::parse_revision(raw)?;
                require_words(&rev.article, "Revised Article")?;
                Ok(ParsedOutput::Revision(rev))
            }
        }
    }
}

fn require_words(text: &str, section: &str) -> Result<(), ParseError> {
    if tokenize_words(text).is_empty() {
        Err(ParseError::EmptySection(section.into()))
    } else {
        Ok(())
    }
}

/// Drops the middle half of the words, keeping the opening and the ending.
pub fn truncate_middle(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() < 4 {
        return text.to_string();
    }
    let keep = words.len() / 4;
    format!(
        "{} [...] {}",
        words[..keep].join(" "),
        words[words.len() - keep..].join(" ")
    )
}

struct Runner<'a> {
    doc: &'a Document,
    cfg: &'a PipelineConfig,
    backends: &'a RoleBackends,
    prompts: &'a PromptSet,
    trace: PipelineTrace,
}

impl Runner<'_> {
    fn call(&mut self, iteration: usize, step: Step<'_>) -> Result<ParsedOutput, PipelineFailure> {
        let stage = step.template();
        let role = stage.role();
        let backend = self
            .backends
            .get(role)
            .ok_or(ConfigError::MissingBackend(role))?;
        let sampling = self
            .cfg
            .role_config(role)
            .map(|rc| rc.sampling)
            .unwrap_or_default();

        let mut parse_failures = 0;
        let mut shortened: Option<Article> = None;
        loop {
            let bundle = step
                .render(self.prompts, self.doc, shortened.as_ref())
                .map_err(|source| PipelineFailure::Prompt {
                    stage,
                    iteration,
                    source,
                })?;
            let messages = vec![
                ChatMessage::system(bundle.system_text),
                ChatMessage::user(bundle.user_text),
            ];
            let mut record = CallRecord {
                role,
                template_id: stage,
                iteration,
                backend: backend.name().to_string(),
                messages,
                truncated_input: shortened.is_some(),
                response: None,
                error: None,
                parsed: None,
                usage: None,
                latency_ms: 0,
                attempts: 0,
            };
            log::debug!("{}: {stage} call, iteration {iteration}", self.doc.id);
            let result = llmclient::complete(backend.as_ref(), &sampling, &record.messages);
            match result {
                Ok(completion) => {
                    record.usage = completion.usage;
                    record.latency_ms = completion.latency_ms;
                    record.attempts = completion.attempts;
                    let parsed = step.parse(&completion.text);
                    record.response = Some(completion.text);
                    match parsed {
                        Ok(out) => {
                            record.parsed = Some(out.clone());
                            self.trace.call_records.push(record);
                            return Ok(out);
                        }
                        Err(source) => {
                            record.error = Some(source.to_string());
                            self.trace.call_records.push(record);
                            parse_failures += 1;
                            if parse_failures > self.cfg.parse_retry_limit {
                                return Err(PipelineFailure::Parse {
                                    stage,
                                    iteration,
                                    attempts: parse_failures,
                                    source,
                                });
                            }
                            log::warn!(
                                "{}: {stage} output at iteration {iteration} did not parse ({source}); retrying",
                                self.doc.id
                            );
                        }
                    }
                }
                Err(LlmError::ContextLength(message)) if shortened.is_none() && step.draft().is_some() => {
                    record.error = Some(LlmError::ContextLength(message).to_string());
                    self.trace.call_records.push(record);
                    let draft = step.draft().expect("checked");
                    log::warn!(
                        "{}: {stage} prompt too long at iteration {iteration}; retrying with a shortened draft",
                        self.doc.id
                    );
                    shortened = Some(Article::new(draft.iteration, truncate_middle(&draft.text)));
                }
                Err(source) => {
                    record.error = Some(source.to_string());
                    self.trace.call_records.push(record);
                    return Err(PipelineFailure::Backend {
                        stage,
                        iteration,
                        source,
                    });
                }
            }
        }
    }

    fn run(&mut self) -> Result<(), PipelineFailure> {
        self.cfg.validate()?;
        for &role in self.cfg.mode.required_roles() {
            if self.backends.get(role).is_none() {
                return Err(ConfigError::MissingBackend(role).into());
            }
        }

        let ParsedOutput::Article { text } = self.call(0, Step::Write)? else {
            unreachable!("write step parses to an article")
        };
        self.trace.drafts.push(Article::new(0, text));

        for i in 1..=self.cfg.iterations {
            let prev = self.trace.drafts[i - 1].clone();
            let notes = match self.cfg.mode {
                Mode::Full | Mode::NoSuggestions => {
                    let ParsedOutput::Notes(n) = self.call(i, Step::Read(&prev))? else {
                        unreachable!("read step parses to notes")
                    };
                    self.trace.notes.push(n.clone());
                    Some(n)
                }
                Mode::NoNotes | Mode::NoCollaboration => None,
            };
            let feedback = match (self.cfg.mode, &notes) {
                (Mode::Full, Some(n)) => Some(self.call(i, Step::Suggest(&prev, n))?),
                (Mode::NoNotes, _) => Some(self.call(i, Step::SuggestNoNotes(&prev))?),
                _ => None,
            };
            let advice = match feedback {
                Some(ParsedOutput::Feedback(f)) => {
                    self.trace.feedback.push(f.clone());
                    Some(f.advice)
                }
                Some(_) => unreachable!("suggest step parses to feedback"),
                None => None,
            };
            let step = match (&advice, &notes) {
                (Some(a), _) => Step::Revise(&prev, a),
                (None, Some(n)) => Step::ReviseNotes(&prev, n),
                (None, None) => Step::RevisePlain(&prev),
            };
            let ParsedOutput::Revision(rev) = self.call(i, step)? else {
                unreachable!("revise step parses to a revision")
            };
            self.trace.drafts.push(Article::new(i, rev.article));
        }
        Ok(())
    }
}

/// Runs one document through `cfg.iterations` rounds of collaboration.
pub fn run_pipeline(
    doc: &Document,
    cfg: &PipelineConfig,
    backends: &RoleBackends,
    prompts: &PromptSet,
) -> Result<PipelineTrace, PipelineError> {
    let mut runner = Runner {
        doc,
        cfg,
        backends,
        prompts,
        trace: PipelineTrace::start(doc, cfg),
    };
    match runner.run() {
        Ok(()) => Ok(runner.trace),
        Err(kind) => {
            let mut trace = runner.trace;
            trace.failure = Some(kind.to_string());
            Err(PipelineError {
                kind,
                trace: Box::new(trace),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("iteration {k} requested but the trace has drafts 0..={last}")]
pub struct OutOfRange {
    pub k: usize,
    pub last: usize,
}

/// The draft from iteration `k`.
pub fn select_final(trace: &PipelineTrace, k: usize) -> Result<&Article, OutOfRange> {
    trace.drafts.get(k).ok_or(OutOfRange {
        k,
        last: trace.drafts.len().saturating_sub(1),
    })
}

/// Fills `trace.reports` with one readability report per draft.
pub fn score_trace(trace: &mut PipelineTrace, familiar: &FamiliarWordList) -> Result<(), MetricsError> {
    if trace.drafts.is_empty() {
        return Err(MetricsError::EmptyText);
    }
    trace.reports = trace
        .drafts
        .iter()
        .map(|d| readability_report(&d.text, familiar))
        .collect::<Result<_, _>>()?;
    Ok(())
}
