//! Scripted responses and fixture paths shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use popsci::llmclient::{ScriptEntry, ScriptedBackend};
use popsci::orchestrator::{Mode, RoleBackends};

pub const NOTES: &str =
    "### Extraction\n1. enzyme\n2. kinetics\n### Explanation\n1. enzyme: a protein that speeds up a reaction\n2. kinetics: how fast a reaction goes\n";
pub const FEEDBACK: &str =
    "## Evaluation for reader's notes\n- Both terms were worth flagging.\n## Advice\n1. Explain enzyme in plain words.\n2. Use shorter sentences.\n";
pub const ADVICE_ONLY: &str = "## Advice\n1. Use shorter sentences.\n";

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn draft_text(i: usize) -> String {
    format!("Draft {i} says that yeast enzymes work fast. Each draft is a little plainer than the last one.")
}

pub fn article(i: usize) -> String {
    format!("## Article\n{}\n", draft_text(i))
}

pub fn revision(i: usize) -> String {
    format!("## Improvement\nPlainer words.\n\n## Revised Article\n{}\n", draft_text(i))
}

/// Responses in call order for `mode` with `t` iterations.
pub fn script(mode: Mode, t: usize) -> Vec<String> {
    let mut out = vec![article(0)];
    for i in 1..=t {
        match mode {
            Mode::Full => out.extend([NOTES.to_string(), FEEDBACK.to_string()]),
            Mode::NoNotes => out.push(ADVICE_ONLY.to_string()),
            Mode::NoSuggestions => out.push(NOTES.to_string()),
            Mode::NoCollaboration => {}
        }
        out.push(revision(i));
    }
    out
}

pub fn scripted(responses: Vec<String>) -> RoleBackends {
    let entries = responses.into_iter().map(ScriptEntry::respond).collect();
    RoleBackends::shared(Arc::new(ScriptedBackend::new(entries)))
}
