//! Prompt rendering for the journalist, reader and editor agents.
//!
//! System messages carry the agent prompt text verbatim. Run-specific content
//! goes in the user message as labeled blocks (`[PAPER SUMMARY]`,
//! `[ARTICLE]`, `[READER NOTES]`, `[ADVICE]`) filled from `{{slot}}`
//! templates. Both live as data files under `prompts/`.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdextract::{numbered_list, ReadingNotes};
use crate::model::{Article, Document, TemplateId};

/// Bumped whenever a file under `prompts/` changes.
pub const PROMPT_SET_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentsError {
    #[error("document has an empty abstract")]
    EmptyDocument,
    #[error("article text is empty")]
    EmptyArticle,
    #[error("missing input: {0}")]
    EmptyInput(&'static str),
    #[error("template {template}: {message}")]
    Template { template: String, message: String },
    #[error("cannot read prompt file {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

/// A text with `{{name}}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(name: &str, text: &str) -> Result<Self, AgentsError> {
        let err = |message: String| AgentsError::Template {
            template: name.to_string(),
            message,
        };
        let mut pieces = Vec::new();
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].to_string()));
            }
            let after = &rest[open + 2..];
            let close = after
                .find("}}")
                .ok_or_else(|| err("unterminated `{{`".into()))?;
            let slot = after[..close].trim();
            if slot.is_empty() || !slot.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(format!("invalid slot name {slot:?}")));
            }
            pieces.push(Piece::Slot(slot.to_string()));
            rest = &after[close + 2..];
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            pieces,
        })
    }

    pub fn slots(&self) -> Vec<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.as_str()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Substitutes every slot. Values are inserted verbatim and never rescanned.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, AgentsError> {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(slot) => {
                    let value = values
                        .iter()
                        .find(|(k, _)| k == slot)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| AgentsError::Template {
                            template: self.name.clone(),
                            message: format!("no value for slot {slot:?}"),
                        })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// A rendered system/user message pair for one agent call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub template_id: TemplateId,
}

/// File names of the prompt set, relative to a prompt directory.
pub mod files {
    pub const JOURNALIST: &str = "journalist.system.txt";
    pub const READER: &str = "reader.system.txt";
    pub const EDITOR: &str = "editor.system.txt";
    pub const EDITOR_NO_NOTES: &str = "editor_no_notes.system.txt";
    pub const REVISION: &str = "revision.system.txt";
    pub const WRITE: &str = "write.user.txt";
    pub const READ: &str = "read.user.txt";
    pub const SUGGEST: &str = "suggest.user.txt";
    pub const SUGGEST_NO_NOTES: &str = "suggest_no_notes.user.txt";
    pub const REVISE: &str = "revise.user.txt";
    pub const REVISE_NOTES: &str = "revise_notes.user.txt";
    pub const REVISE_PLAIN: &str = "revise_plain.user.txt";
}

macro_rules! bundled {
    ($file:literal) => {
        ($file, include_str!(concat!("../prompts/", $file)))
    };
}

const BUNDLED: [(&str, &str); 12] = [
    bundled!("journalist.system.txt"),
    bundled!("reader.system.txt"),
    bundled!("editor.system.txt"),
    bundled!("editor_no_notes.system.txt"),
    bundled!("revision.system.txt"),
    bundled!("write.user.txt"),
    bundled!("read.user.txt"),
    bundled!("suggest.user.txt"),
    bundled!("suggest_no_notes.user.txt"),
    bundled!("revise.user.txt"),
    bundled!("revise_notes.user.txt"),
    bundled!("revise_plain.user.txt"),
];

/// Required slots of each user template.
const USER_SLOTS: &[(&str, &[&str])] = &[
    (files::WRITE, &["abstract"]),
    (files::READ, &["article"]),
    (files::SUGGEST, &["abstract", "article", "notes"]),
    (files::SUGGEST_NO_NOTES, &["abstract", "article"]),
    (files::REVISE, &["abstract", "article", "advice"]),
    (files::REVISE_NOTES, &["abstract", "article", "notes"]),
    (files::REVISE_PLAIN, &["abstract", "article"]),
];

/// The full set of system prompts and user templates.
#[derive(Debug, Clone)]
pub struct PromptSet {
    journalist: String,
    reader: String,
    editor: String,
    editor_no_notes: String,
    revision: String,
    write: Template,
    read: Template,
    suggest: Template,
    suggest_no_notes: Template,
    revise: Template,
    revise_notes: Template,
    revise_plain: Template,
}

impl PromptSet {
    /// The prompt files compiled into the crate.
    pub fn builtin() -> &'static PromptSet {
        static SET: OnceLock<PromptSet> = OnceLock::new();
        SET.get_or_init(|| {
            PromptSet::from_lookup(|name| {
                BUNDLED
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, t)| t.to_string())
                    .ok_or_else(|| AgentsError::Io {
                        path: name.into(),
                        message: "not bundled".into(),
                    })
            })
            .expect("bundled prompt set is valid")
        })
    }

    /// Loads a prompt set from a directory laid out like `prompts/`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, AgentsError> {
        let dir = dir.as_ref();
        Self::from_lookup(|name| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| AgentsError::Io {
                path,
                message: e.to_string(),
            })
        })
    }

    fn from_lookup(
        mut read: impl FnMut(&str) -> Result<String, AgentsError>,
    ) -> Result<Self, AgentsError> {
        let mut template = |name: &str| -> Result<Template, AgentsError> {
            let t = Template::parse(name, &read(name)?)?;
            let expected = USER_SLOTS
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, s)| *s)
                .unwrap_or_default();
            let mut found = t.slots();
            found.sort_unstable();
            let mut want = expected.to_vec();
            want.sort_unstable();
            if found != want {
                return Err(AgentsError::Template {
                    template: name.to_string(),
                    message: format!("expected slots {want:?} exactly once each, found {found:?}"),
                });
            }
            Ok(t)
        };
        let write = template(files::WRITE)?;
        let read_t = template(files::READ)?;
        let suggest = template(files::SUGGEST)?;
        let suggest_no_notes = template(files::SUGGEST_NO_NOTES)?;
        let revise = template(files::REVISE)?;
        let revise_notes = template(files::REVISE_NOTES)?;
        let revise_plain = template(files::REVISE_PLAIN)?;
        Ok(Self {
            journalist: read(files::JOURNALIST)?,
            reader: read(files::READER)?,
            editor: read(files::EDITOR)?,
            editor_no_notes: read(files::EDITOR_NO_NOTES)?,
            revision: read(files::REVISION)?,
            write,
            read: read_t,
            suggest,
            suggest_no_notes,
            revise,
            revise_notes,
            revise_plain,
        })
    }

    pub fn render_write(&self, doc: &Document) -> Result<PromptBundle, AgentsError> {
        let abstract_text = require_doc(doc)?;
        Ok(PromptBundle {
            system_text: self.journalist.clone(),
            user_text: self.write.render(&[("abstract", abstract_text)])?,
            template_id: TemplateId::Write,
        })
    }

    pub fn render_read(&self, article: &Article) -> Result<PromptBundle, AgentsError> {
        let text = require_article(article)?;
        Ok(PromptBundle {
            system_text: self.reader.clone(),
            user_text: self.read.render(&[("article", text)])?,
            template_id: TemplateId::Read,
        })
    }

    pub fn render_suggest(
        &self,
        doc: &Document,
        article: &Article,
        notes: &ReadingNotes,
    ) -> Result<PromptBundle, AgentsError> {
        let abstract_text = require(doc.source_abstract.as_str(), "paper abstract")?;
        let text = require(article.text.as_str(), "article")?;
        if notes.extractions.is_empty() && notes.explanations.is_empty() {
            return Err(AgentsError::EmptyInput("reader notes"));
        }
        let rendered = notes.to_markdown();
        Ok(PromptBundle {
            system_text: self.editor.clone(),
            user_text: self.suggest.render(&[
                ("abstract", abstract_text),
                ("article", text),
                ("notes", rendered.trim_end()),
            ])?,
            template_id: TemplateId::Suggest,
        })
    }

    /// Editor prompt without reader notes, for the `no-notes` ablation.
    pub fn render_suggest_without_notes(
        &self,
        doc: &Document,
        article: &Article,
    ) -> Result<PromptBundle, AgentsError> {
        let abstract_text = require(doc.source_abstract.as_str(), "paper abstract")?;
        let text = require(article.text.as_str(), "article")?;
        Ok(PromptBundle {
            system_text: self.editor_no_notes.clone(),
            user_text: self
                .suggest_no_notes
                .render(&[("abstract", abstract_text), ("article", text)])?,
            template_id: TemplateId::Suggest,
        })
    }

    pub fn render_revise<S: AsRef<str>>(
        &self,
        doc: &Document,
        prev: &Article,
        advice: &[S],
    ) -> Result<PromptBundle, AgentsError> {
        let abstract_text = require(doc.source_abstract.as_str(), "paper abstract")?;
        let text = require(prev.text.as_str(), "previous article")?;
        if advice.is_empty() {
            return Err(AgentsError::EmptyInput("advice"));
        }
        let listed = numbered_list(advice);
        Ok(PromptBundle {
            system_text: self.revision.clone(),
            user_text: self.revise.render(&[
                ("abstract", abstract_text),
                ("article", text),
                ("advice", listed.trim_end()),
            ])?,
            template_id: TemplateId::Revise,
        })
    }

    /// Revision from reader notes in place of advice, for the `no-suggestions` ablation.
    pub fn render_revise_with_notes(
        &self,
        doc: &Document,
        prev: &Article,
        notes: &ReadingNotes,
    ) -> Result<PromptBundle, AgentsError> {
        let abstract_text = require(doc.source_abstract.as_str(), "paper abstract")?;
        let text = require(prev.text.as_str(), "previous article")?;
        let rendered = notes.to_markdown();
        Ok(PromptBundle {
            system_text: self.revision.clone(),
            user_text: self.revise_notes.render(&[
                ("abstract", abstract_text),
                ("article", text),
                ("notes", rendered.trim_end()),
            ])?,
            template_id: TemplateId::Revise,
        })
    }

    /// Revision from the previous draft alone, for the `no-collaboration` ablation.
    pub fn render_revise_plain(
        &self,
        doc: &Document,
        prev: &Article,
    ) -> Result<PromptBundle, AgentsError> {
        let abstract_text = require(doc.source_abstract.as_str(), "paper abstract")?;
        let text = require(prev.text.as_str(), "previous article")?;
        Ok(PromptBundle {
            system_text: self.revision.clone(),
            user_text: self
                .revise_plain
                .render(&[("abstract", abstract_text), ("article", text)])?,
            template_id: TemplateId::Revise,
        })
    }

    pub fn journalist_system(&self) -> &str {
        &self.journalist
    }

    pub fn reader_system(&self) -> &str {
        &self.reader
    }

    pub fn editor_system(&self) -> &str {
        &self.editor
    }

    pub fn editor_no_notes_system(&self) -> &str {
        &self.editor_no_notes
    }

    pub fn revision_system(&self) -> &str {
        &self.revision
    }
}

fn require<'a>(text: &'a str, what: &'static str) -> Result<&'a str, AgentsError> {
    if text.trim().is_empty() {
        Err(AgentsError::EmptyInput(what))
    } else {
        Ok(text)
    }
}

fn require_doc(doc: &Document) -> Result<&str, AgentsError> {
    require(&doc.source_abstract, "paper abstract").map_err(|_| AgentsError::EmptyDocument)
}

fn require_article(article: &Article) -> Result<&str, AgentsError> {
    require(&article.text, "article").map_err(|_| AgentsError::EmptyArticle)
}

pub fn render_write(doc: &Document) -> Result<PromptBundle, AgentsError> {
    PromptSet::builtin().render_write(doc)
}

pub fn render_read(article: &Article) -> Result<PromptBundle, AgentsError> {
    PromptSet::builtin().render_read(article)
}

pub fn render_suggest(
    doc: &Document,
    article: &Article,
    notes: &ReadingNotes,
) -> Result<PromptBundle, AgentsError> {
    PromptSet::builtin().render_suggest(doc, article, notes)
}

pub fn render_revise<S: AsRef<str>>(
    doc: &Document,
    prev: &Article,
    advice: &[S],
) -> Result<PromptBundle, AgentsError> {
    PromptSet::builtin().render_revise(doc, prev, advice)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document::new("d1", text)
    }

    fn notes(extractions: &[&str], explanations: &[&str]) -> ReadingNotes {
        ReadingNotes {
            extractions: extractions.iter().map(|s| s.to_string()).collect(),
            explanations: explanations.iter().map(|s| s.to_string()).collect(),
            raw: String::new(),
        }
    }

    #[test]
    fn write_prompt() {
        let b = render_write(&doc("A.")).unwrap();
        assert_eq!(b.template_id, TemplateId::Write);
        assert_eq!(b.user_text.matches("A.").count(), 1);
        assert!(b
            .system_text
            .contains("science journalist for general audiences"));
    }

    #[test]
    fn write_passes_heading_collisions_verbatim() {
        let b = render_write(&doc("Intro\n## Article\n{{article}}")).unwrap();
        assert!(b.user_text.contains("Intro\n## Article\n{{article}}"));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert_eq!(render_write(&doc("  ")), Err(AgentsError::EmptyDocument));
        assert_eq!(
            render_read(&Article::new(0, "")),
            Err(AgentsError::EmptyArticle)
        );
        assert_eq!(
            render_suggest(&doc("x"), &Article::new(0, ""), &notes(&["a"], &["b"])),
            Err(AgentsError::EmptyInput("article"))
        );
        assert_eq!(
            render_suggest(&doc("x"), &Article::new(0, "y"), &notes(&[], &[])),
            Err(AgentsError::EmptyInput("reader notes"))
        );
        assert_eq!(
            render_revise::<&str>(&doc("x"), &Article::new(0, "y"), &[]),
            Err(AgentsError::EmptyInput("advice"))
        );
    }

    #[test]
    fn read_prompt() {
        let a = Article::new(0, "X.");
        let b = render_read(&a).unwrap();
        assert!(b.system_text.contains("extract all technical terms"));
        assert_eq!(b.user_text.matches("X.").count(), 1);
        assert_eq!(b, render_read(&a).unwrap());
    }

    #[test]
    fn suggest_prompt_lists_notes() {
        let n = notes(&["first term", "second term"], &["meaning"]);
        let b = render_suggest(&doc("abs"), &Article::new(1, "art"), &n).unwrap();
        assert!(b
            .system_text
            .contains("Don't suggest visualization, references and links"));
        assert!(b.user_text.contains("1. first term\n2. second term\n"));
        assert!(b.user_text.contains("[PAPER SUMMARY]\nabs"));
        assert!(b.user_text.contains("[ARTICLE]\nart"));
        assert!(b.user_text.contains("[READER NOTES]\n### Extraction"));
        assert_eq!(
            b,
            render_suggest(&doc("abs"), &Article::new(1, "art"), &n).unwrap()
        );
    }

    #[test]
    fn revise_prompt() {
        let b = render_revise(
            &doc("the abstract"),
            &Article::new(0, "draft"),
            &["Simplify technical terms"],
        )
        .unwrap();
        assert!(b
            .system_text
            .contains("Choose and refine the most relevant and suitable advice"));
        assert!(b.user_text.contains("[ADVICE]\n1. Simplify technical terms"));
        assert!(b.user_text.contains("the abstract"));
        assert_eq!(b.template_id, TemplateId::Revise);
    }

    #[test]
    fn ablation_variants() {
        let set = PromptSet::builtin();
        let d = doc("abs");
        let a = Article::new(0, "art");
        let b = set.render_suggest_without_notes(&d, &a).unwrap();
        assert!(!b.user_text.contains("[READER NOTES]"));
        assert!(!b.system_text.contains("reader's notes"));
        assert!(b.system_text.contains("## Advice"));

        let b = set
            .render_revise_with_notes(&d, &a, &notes(&["t"], &["e"]))
            .unwrap();
        assert!(b.user_text.contains("[READER NOTES]\n### Extraction\n1. t"));
        assert!(!b.user_text.contains("[ADVICE]"));

        let b = set.render_revise_plain(&d, &a).unwrap();
        assert!(b.user_text.ends_with("[ARTICLE]\nart\n"));
    }

    #[test]
    fn slot_values_are_not_rescanned() {
        let t = Template::parse("t", "<{{a}}|{{b}}>").unwrap();
        assert_eq!(t.render(&[("a", "{{b}}"), ("b", "x")]).unwrap(), "<{{b}}|x>");
        assert!(t.render(&[("a", "1")]).is_err());
        assert!(Template::parse("t", "{{ oops").is_err());
        assert!(Template::parse("t", "{{bad name}}").is_err());
    }

    #[test]
    fn user_templates_have_each_slot_once() {
        for (file, slots) in USER_SLOTS {
            let text = BUNDLED.iter().find(|(n, _)| n == file).unwrap().1;
            let t = Template::parse(file, text).unwrap();
            let values: Vec<(&str, String)> = slots
                .iter()
                .map(|s| (*s, format!("<<SENTINEL-{s}>>")))
                .collect();
            let pairs: Vec<(&str, &str)> =
                values.iter().map(|(k, v)| (*k, v.as_str())).collect();
            let out = t.render(&pairs).unwrap();
            for (_, v) in &values {
                assert_eq!(out.matches(v.as_str()).count(), 1, "{file}: {v}");
            }
            assert!(!out.contains("{{"), "{file}");
        }
    }

    #[test]
    fn load_dir_matches_builtin_and_validates_slots() {
        let dir = tempfile::tempdir().unwrap();
        for (name, text) in BUNDLED {
            std::fs::write(dir.path().join(name), text).unwrap();
        }
        let set = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.journalist_system(), PromptSet::builtin().journalist_system());

        std::fs::write(dir.path().join(files::READ), "[ARTICLE]\n").unwrap();
        assert!(matches!(
            PromptSet::load_dir(dir.path()),
            Err(AgentsError::Template { .. })
        ));
        std::fs::remove_file(dir.path().join(files::READER)).unwrap();
        assert!(PromptSet::load_dir(dir.path()).is_err());
    }
}
