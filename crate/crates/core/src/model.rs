//! Domain types shared across the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Source corpus a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    #[serde(rename = "scitech")]
    SciTech,
    #[serde(rename = "elife")]
    ELife,
    Plos,
    #[default]
    Custom,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::SciTech => "scitech",
            Dataset::ELife => "elife",
            Dataset::Plos => "plos",
            Dataset::Custom => "custom",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scitech" => Ok(Dataset::SciTech),
            "elife" => Ok(Dataset::ELife),
            "plos" => Ok(Dataset::Plos),
            "custom" => Ok(Dataset::Custom),
            other => Err(format!("unknown dataset {other:?}")),
        }
    }
}

/// A paper abstract to rewrite, with an optional human plain-language summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source_abstract: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_summary: Option<String>,
    #[serde(default)]
    pub dataset: Dataset,
}

impl Document {
    pub fn new(id: impl Into<String>, source_abstract: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source_abstract: source_abstract.into(),
            reference_summary: None,
            dataset: Dataset::Custom,
        }
    }

    pub fn with_summary(mut self, summary: impl Into<String>) -> Self {
        self.reference_summary = Some(summary.into());
        self
    }

    pub fn with_dataset(mut self, dataset: Dataset) -> Self {
        self.dataset = dataset;
        self
    }
}

/// One draft of the popular-science article. Iteration 0 is the initial writing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub iteration: usize,
    pub text: String,
}

impl Article {
    pub fn new(iteration: usize, text: impl Into<String>) -> Self {
        Self {
            iteration,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Journalist,
    Reader,
    Editor,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Journalist, Role::Reader, Role::Editor];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Journalist => "journalist",
            Role::Reader => "reader",
            Role::Editor => "editor",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which of the four agent prompts produced a call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Write,
    Read,
    Suggest,
    Revise,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Write => "write",
            TemplateId::Read => "read",
            TemplateId::Suggest => "suggest",
            TemplateId::Revise => "revise",
        }
    }

    pub fn role(self) -> Role {
        match self {
            TemplateId::Write | TemplateId::Revise => Role::Journalist,
            TemplateId::Read => Role::Reader,
            TemplateId::Suggest => Role::Editor,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
