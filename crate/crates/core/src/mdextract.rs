//! Extraction of the markdown-sectioned completions the agent prompts ask for.
//!
//! Headings are matched by normalized text (lowercase, trimmed, trailing
//! colons and emphasis markers removed) at any level from 1 to 4. A named
//! block runs until the next heading of the same or a shallower level, or
//! until another heading of the same output grammar, so articles may carry
//! their own sub-headings. Every string returned is a slice of the raw
//! completion; nothing is rewritten.
//!
//! This module only reports what is wrong. Retrying a malformed completion is
//! up to the caller.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing section {0:?}")]
    MissingSection(String),
    #[error("section {0:?} has no content")]
    EmptySection(String),
    #[error("section {0:?} has no numbered items")]
    EmptyList(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    /// Normalized heading text. The preamble before the first heading is
    /// reported with level 0 and heading `"preamble"`.
    pub heading: String,
    pub body: String,
    pub level: usize,
}

impl Section {
    pub fn is_preamble(&self) -> bool {
        self.level == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadingNotes {
    pub extractions: Vec<String>,
    pub explanations: Vec<String>,
    pub raw: String,
}

impl ReadingNotes {
    /// Renders the notes back in the reader's output format.
    pub fn to_markdown(&self) -> String {
        format!(
            "### Extraction\n{}### Explanation\n{}",
            numbered_list(&self.extractions),
            numbered_list(&self.explanations)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditorFeedback {
    pub evaluation: Vec<String>,
    pub advice: Vec<String>,
    pub raw: String,
}

impl EditorFeedback {
    /// Renders the feedback back in the editor's output format.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        if !self.evaluation.is_empty() {
            out.push_str("## Evaluation for reader's notes\n");
            for item in &self.evaluation {
                out.push_str("- ");
                out.push_str(item);
                out.push('\n');
            }
        }
        out.push_str("## Advice\n");
        out.push_str(&numbered_list(&self.advice));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub improvement: String,
    pub article: String,
}

/// Formats items as `1. a\n2. b\n`.
pub fn numbered_list<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| format!("{}. {}\n", i + 1, item.as_ref()))
        .collect()
}

#[derive(Debug, Clone)]
struct RawSection {
    heading: String,
    level: usize,
    body_start: usize,
    body_end: usize,
}

fn normalize_heading(text: &str) -> String {
    let mut h = text.trim();
    loop {
        let next = h
            .trim_end_matches('#')
            .trim()
            .trim_end_matches(':')
            .trim()
            .trim_matches(|c| c == '*' || c == '_')
            .trim();
        if next == h {
            break;
        }
        h = next;
    }
    h.to_lowercase()
}

/// Returns `(level, normalized heading)` for an ATX heading line of level 1-4.
fn heading_of(line: &str) -> Option<(usize, String)> {
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent > 3 {
        return None;
    }
    let rest = &line[indent..];
    let level = rest.len() - rest.trim_start_matches('#').len();
    if !(1..=4).contains(&level) {
        return None;
    }
    let after = &rest[level..];
    if !after.is_empty() && !after.starts_with([' ', '\t']) {
        return None;
    }
    let heading = normalize_heading(after);
    (!heading.is_empty()).then_some((level, heading))
}

fn raw_sections(raw: &str) -> Vec<RawSection> {
    let mut sections = vec![RawSection {
        heading: "preamble".into(),
        level: 0,
        body_start: 0,
        body_end: raw.len(),
    }];
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let content = line.trim_end_matches(['\n', '\r']);
        if let Some((level, heading)) = heading_of(content) {
            if let Some(prev) = sections.last_mut() {
                prev.body_end = offset;
            }
            sections.push(RawSection {
                heading,
                level,
                body_start: offset + line.len(),
                body_end: raw.len(),
            });
        }
        offset += line.len();
    }
    sections
}

/// Splits a completion into heading-delimited sections.
pub fn split_sections(raw: &str) -> Vec<Section> {
    raw_sections(raw)
        .into_iter()
        .filter_map(|s| {
            let body = raw[s.body_start..s.body_end].trim();
            if s.level == 0 && body.is_empty() {
                return None;
            }
            Some(Section {
                heading: s.heading,
                body: body.to_string(),
                level: s.level,
            })
        })
        .collect()
}

/// Body of the first section named in `targets`, extended over deeper
/// sub-headings that are not in `grammar`.
fn find_block<'a>(raw: &'a str, targets: &[&str], grammar: &[&str]) -> Option<&'a str> {
    let sections = raw_sections(raw);
    let idx = sections
        .iter()
        .position(|s| s.level > 0 && targets.contains(&s.heading.as_str()))?;
    let level = sections[idx].level;
    let mut end = sections[idx].body_end;
    for s in &sections[idx + 1..] {
        if s.level <= level || grammar.contains(&s.heading.as_str()) {
            break;
        }
        end = s.body_end;
    }
    Some(raw[sections[idx].body_start..end].trim())
}

/// Splits `body` into items started by `N.` or `N)` lines. Lines that follow
/// an item marker continue that item; text before the first marker is ignored.
fn numbered_items(body: &str) -> Vec<&str> {
    let mut items = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let content = line.trim_end();
        if let Some(marker_len) = item_marker(content) {
            if let Some((s, e)) = current.take() {
                items.push(&body[s..e]);
            }
            current = Some((offset + marker_len, offset + content.len()));
        } else if !content.trim().is_empty() {
            if let Some((_, e)) = current.as_mut() {
                *e = offset + content.len();
            }
        }
        offset += line.len();
    }
    if let Some((s, e)) = current {
        items.push(&body[s..e]);
    }
    items
        .into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Byte length of a leading `N.` / `N)` marker plus following blanks.
fn item_marker(line: &str) -> Option<usize> {
    let trimmed = line.trim_start();
    let indent = line.len() - trimmed.len();
    let digits = trimmed.len() - trimmed.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = &trimmed[digits..];
    let rest = rest.strip_prefix(['.', ')'])?;
    if !rest.is_empty() && !rest.starts_with([' ', '\t']) {
        return None;
    }
    let blanks = rest.len() - rest.trim_start().len();
    Some(indent + digits + 1 + blanks)
}

fn bullet_items(body: &str) -> Vec<&str> {
    body.lines()
        .filter_map(|line| {
            let t = line.trim_start();
            t.strip_prefix("- ")
                .or_else(|| t.strip_prefix("* "))
                .or_else(|| t.strip_prefix("\u{2022} "))
        })
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

const ARTICLE_GRAMMAR: &[&str] = &["article", "improvement", "revised article"];

/// Extracts the article body from a journalist completion.
pub fn parse_article(raw: &str) -> Result<String, ParseError> {
    if let Some(body) = find_block(raw, &["article"], ARTICLE_GRAMMAR) {
        if body.is_empty() {
            return Err(ParseError::EmptySection("Article".into()));
        }
        return Ok(body.to_string());
    }
    let candidates: Vec<Section> = split_sections(raw)
        .into_iter()
        .filter(|s| !s.body.is_empty())
        .collect();
    match candidates.as_slice() {
        [only] => Ok(only.body.clone()),
        _ => Err(ParseError::MissingSection("Article".into())),
    }
}

const NOTES_GRAMMAR: &[&str] = &["extraction", "extractions", "explanation", "explanations"];

pub fn parse_notes(raw: &str) -> Result<ReadingNotes, ParseError> {
    let list = |targets: &[&str], name: &str| -> Result<Vec<String>, ParseError> {
        let body = find_block(raw, targets, NOTES_GRAMMAR)
            .ok_or_else(|| ParseError::MissingSection(name.into()))?;
        let items = numbered_items(body);
        if items.is_empty() {
            return Err(ParseError::EmptyList(name.into()));
        }
        Ok(items.into_iter().map(str::to_string).collect())
    };
    let extractions = list(&["extraction", "extractions"], "Extraction")?;
    let explanations = list(&["explanation", "explanations"], "Explanation")?;
    Ok(ReadingNotes {
        extractions,
        explanations,
        raw: raw.to_string(),
    })
}

pub fn parse_feedback(raw: &str) -> Result<EditorFeedback, ParseError> {
    let sections = raw_sections(raw);
    let eval_names: Vec<&str> = sections
        .iter()
        .filter(|s| s.level > 0 && s.heading.starts_with("evaluation"))
        .map(|s| s.heading.as_str())
        .collect();
    let mut grammar = vec!["advice"];
    grammar.extend(&eval_names);

    let advice_body = find_block(raw, &["advice"], &grammar)
        .ok_or_else(|| ParseError::MissingSection("Advice".into()))?;
    let advice: Vec<String> = numbered_items(advice_body)
        .into_iter()
        .map(str::to_string)
        .collect();
    if advice.is_empty() {
        return Err(ParseError::EmptyList("Advice".into()));
    }

    let evaluation = eval_names
        .first()
        .and_then(|name| find_block(raw, &[name], &grammar))
        .map(|body| {
            let bullets = bullet_items(body);
            if bullets.is_empty() {
                numbered_items(body)
            } else {
                bullets
            }
        })
        .unwrap_or_default()
        .into_iter()
        .map(str::to_string)
        .collect();

    Ok(EditorFeedback {
        evaluation,
        advice,
        raw: raw.to_string(),
    })
}

pub fn parse_revision(raw: &str) -> Result<Revision, ParseError> {
    let article = find_block(raw, &["revised article"], ARTICLE_GRAMMAR)
        .or_else(|| find_block(raw, &["article"], ARTICLE_GRAMMAR))
        .ok_or_else(|| ParseError::MissingSection("Revised Article".into()))?;
    if article.is_empty() {
        return Err(ParseError::EmptySection("Revised Article".into()));
    }
    let improvement = find_block(raw, &["improvement", "improvements"], ARTICLE_GRAMMAR)
        .unwrap_or("");
    Ok(Revision {
        improvement: improvement.to_string(),
        article: article.to_string(),
    })
}
