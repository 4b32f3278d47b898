//! Abstract/summary corpora: JSONL loading, seeded splits, summary statistics.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{Dataset, Document};
use crate::textmetrics::TokenizedText;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("bad field mapping {path}: {message}")]
    Mapping { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("invalid split: {0}")]
    InvalidSpec(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document {id}: {message}")]
    Text { id: String, message: String },
}

/// Which JSON keys hold each document field. Corpora disagree on names, so
/// this can be loaded from a small TOML file:
///
/// ```toml
/// id = "paper_id"
/// abstract = "abstract"
/// summary = "lay_summary"
/// dataset = "elife"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapping {
    pub id: String,
    #[serde(rename = "abstract")]
    pub abstract_field: String,
    pub summary: String,
    /// Label applied to every loaded document.
    pub dataset: Dataset,
}

impl Default for FieldMapping {
    fn default() -> Self {
        Self {
            id: "id".into(),
            abstract_field: "abstract".into(),
            summary: "summary".into(),
            dataset: Dataset::Custom,
        }
    }
}

impl FieldMapping {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let err = |message: String| CorpusError::Mapping {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        toml::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadOptions {
    pub mapping: FieldMapping,
    /// Fail on the first bad record instead of skipping it.
    pub strict: bool,
}

impl LoadOptions {
    pub fn strict() -> Self {
        Self {
            strict: true,
            ..Self::default()
        }
    }
}

/// Strings pass through; arrays of strings (paragraph lists) are joined with
/// newlines; numbers are formatted.
fn text_field(record: &serde_json::Map<String, Value>, key: &str) -> Result<Option<String>, String> {
    match record.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.as_str()),
                _ => Err(format!("field {key:?} must hold strings")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|parts| Some(parts.join("\n"))),
        Some(_) => Err(format!("field {key:?} has an unsupported type")),
    }
}

fn parse_record(
    line: &str,
    line_no: usize,
    mapping: &FieldMapping,
) -> Result<Document, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let Value::Object(record) = value else {
        return Err("record is not a JSON object".into());
    };
    let source_abstract = text_field(&record, &mapping.abstract_field)?
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| format!("missing or empty {:?}", mapping.abstract_field))?;
    let id = text_field(&record, &mapping.id)?
        .filter(|s| !s.trim().is_empty())
        .unwrap_or_else(|| line_no.to_string());
    let summary = text_field(&record, &mapping.summary)?.filter(|s| !s.trim().is_empty());
    Ok(Document {
        id,
        source_abstract,
        reference_summary: summary,
        dataset: mapping.dataset,
    })
}

/// Reads one JSON object per line. Blank lines are ignored; records without
/// an id get their 1-based line number. In lenient mode bad records and
/// duplicate ids are skipped with a warning.
pub fn load_jsonl(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_jsonl(&text, opts)
}

pub fn parse_jsonl(text: &str, opts: &LoadOptions) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_record(line, line_no, &opts.mapping).and_then(|doc| {
            if seen.contains(&doc.id) {
                Err(format!("duplicate id {:?}", doc.id))
            } else {
                Ok(doc)
            }
        });
        match parsed {
            Ok(doc) => {
                seen.insert(doc.id.clone());
                docs.push(doc);
            }
            Err(message) if opts.strict => {
                return Err(CorpusError::MalformedRecord {
                    line: line_no,
                    message,
                })
            }
            Err(message) => log::warn!("skipping line {line_no}: {message}"),
        }
    }
    Ok(docs)
}

/// How to partition a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    /// Exact sizes; they must add up to the corpus size.
    Counts {
        train: usize,
        validation: usize,
        test: usize,
    },
    /// Fractions summing to 1. Validation and test sizes are rounded and
    /// train takes the remainder.
    Ratios {
        train: f64,
        validation: f64,
        test: f64,
    },
}

impl SplitSpec {
    /// 1431 train+validation documents and 1000 test documents.
    pub const SCITECH: SplitSpec = SplitSpec::Counts {
        train: 1431,
        validation: 0,
        test: 1000,
    };

    /// 90% / 5% / 5%, as used for eLife and PLOS.
    pub const NINETY_FIVE_FIVE: SplitSpec = SplitSpec::Ratios {
        train: 0.9,
        validation: 0.05,
        test: 0.05,
    };

    fn sizes(&self, n: usize) -> Result<(usize, usize, usize), CorpusError> {
        match *self {
            SplitSpec::Counts {
                train,
                validation,
                test,
            } => {
                let total = train + validation + test;
                if total != n {
                    return Err(CorpusError::InvalidSpec(format!(
                        "counts {train}+{validation}+{test} = {total} but the corpus has {n} documents"
                    )));
                }
                Ok((train, validation, test))
            }
            SplitSpec::Ratios {
                train,
                validation,
                test,
            } => {
                if [train, validation, test].iter().any(|r| r.is_nan() || *r < 0.0) {
                    return Err(CorpusError::InvalidSpec("ratios must be non-negative".into()));
                }
                let sum = train + validation + test;
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(CorpusError::InvalidSpec(format!("ratios sum to {sum}, not 1")));
                }
                let val_n = (validation * n as f64).round() as usize;
                let test_n = (test * n as f64).round() as usize;
                let train_n = n.checked_sub(val_n + test_n).ok_or_else(|| {
                    CorpusError::InvalidSpec(format!("ratios do not fit {n} documents"))
                })?;
                Ok((train_n, val_n, test_n))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
}

/// Shuffles with a ChaCha8 stream seeded from `seed`, then cuts train,
/// validation and test in that order.
pub fn split(docs: &[Document], spec: SplitSpec, seed: u64) -> Result<Split, CorpusError> {
    let (train_n, val_n, _) = spec.sizes(docs.len())?;
    let mut shuffled = docs.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let test = shuffled.split_off(train_n + val_n);
    let validation = shuffled.split_off(train_n);
    Ok(Split {
        train: shuffled,
        validation,
        test,
    })
}

/// Mean word and sentence counts, in the shape of a dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub pair_count: usize,
    pub abstract_words: f64,
    pub abstract_sentences: f64,
    /// Documents that carry a reference summary.
    pub summary_count: usize,
    /// `None` when no document has a summary.
    pub summary_words: Option<f64>,
    pub summary_sentences: Option<f64>,
}

fn count(doc: &Document, text: &str) -> Result<(u64, u64), CorpusError> {
    let tok = TokenizedText::new(text).map_err(|e| CorpusError::Text {
        id: doc.id.clone(),
        message: e.to_string(),
    })?;
    Ok((tok.word_count() as u64, tok.sentence_count() as u64))
}

/// Uses the readability tokenizer for both word and sentence counts.
pub fn stats(docs: &[Document]) -> Result<CorpusStats, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let (mut aw, mut asent) = (0u64, 0u64);
    let (mut sn, mut sw, mut ssent) = (0usize, 0u64, 0u64);
    for doc in docs {
        let (w, s) = count(doc, &doc.source_abstract)?;
        aw += w;
        asent += s;
        if let Some(summary) = doc.reference_summary.as_deref().filter(|s| !s.trim().is_empty()) {
            let (w, s) = count(doc, summary)?;
            sn += 1;
            sw += w;
            ssent += s;
        }
    }
    let n = docs.len() as f64;
    let mean = |total: u64, count: usize| (count > 0).then(|| total as f64 / count as f64);
    Ok(CorpusStats {
        pair_count: docs.len(),
        abstract_words: aw as f64 / n,
        abstract_sentences: asent as f64 / n,
        summary_count: sn,
        summary_words: mean(sw, sn),
        summary_sentences: mean(ssent, sn),
    })
}
