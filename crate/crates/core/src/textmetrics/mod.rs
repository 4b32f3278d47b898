//! Readability scoring: Coleman-Liau Index, Flesch-Kincaid Grade Level and
//! the Dale-Chall Readability Score.
//!
//! All three scores are computed from one [`TokenizedText`]:
//!
//! - CLI  = `0.0588 * L - 0.296 * S - 15.8`, with `L` letters and `S`
//!   sentences per 100 words. Letters are alphabetic characters only.
//! - FKGL = `0.39 * words/sentences + 11.8 * syllables/words - 15.59`
//! - DCRS = `0.1579 * D + 0.0496 * words/sentences`, plus `3.6365` when the
//!   difficult-word percentage `D` exceeds 5.
//!
//! Lower is easier for every score. Everything here is pure.

mod familiar;
mod segment;
mod syllables;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use familiar::FamiliarWordList;
pub use segment::{segment_sentences, tokenize_words};
pub use syllables::count_syllables;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("text contains no words")]
    EmptyText,
    #[error("cannot count syllables of an empty word")]
    EmptyWord,
    #[error("cannot read word list {path}: {message}")]
    WordListIo { path: PathBuf, message: String },
    #[error("word list line {line}: entry {entry:?} is not a single lowercase word")]
    InvalidWordListEntry { line: usize, entry: String },
}

/// Sentences and words of a text, with the aggregate counts the scores use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    sentences: Vec<String>,
    sentence_words: Vec<Vec<String>>,
    letter_count: usize,
    syllable_count: usize,
}

impl TokenizedText {
    pub fn new(text: &str) -> Result<Self, MetricsError> {
        let sentences = segment_sentences(text)?;
        let sentence_words: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| tokenize_words(s).into_iter().map(str::to_owned).collect())
            .collect();

        let mut letter_count = 0;
        let mut syllable_count = 0;
        for word in sentence_words.iter().flatten() {
            letter_count += word.chars().filter(|c| c.is_alphabetic()).count();
            syllable_count += count_syllables(word)?;
        }

        Ok(Self {
            sentences,
            sentence_words,
            letter_count,
            syllable_count,
        })
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn sentence_words(&self) -> &[Vec<String>] {
        &self.sentence_words
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.sentence_words.iter().flatten().map(String::as_str)
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn word_count(&self) -> usize {
        self.sentence_words.iter().map(Vec::len).sum()
    }

    pub fn letter_count(&self) -> usize {
        self.letter_count
    }

    pub fn syllable_count(&self) -> usize {
        self.syllable_count
    }

    pub fn difficult_word_count(&self, familiar: &FamiliarWordList) -> usize {
        self.words().filter(|w| !familiar.is_familiar(w)).count()
    }

    fn ratios(&self) -> Result<(f64, f64), MetricsError> {
        let words = self.word_count();
        let sentences = self.sentence_count();
        if words == 0 || sentences == 0 {
            return Err(MetricsError::EmptyText);
        }
        Ok((words as f64, sentences as f64))
    }
}

pub fn coleman_liau(tok: &TokenizedText) -> Result<f64, MetricsError> {
    let (words, sentences) = tok.ratios()?;
    let letters_per_100 = tok.letter_count() as f64 / words * 100.0;
    let sentences_per_100 = sentences / words * 100.0;
    Ok(0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8)
}

pub fn flesch_kincaid_grade(tok: &TokenizedText) -> Result<f64, MetricsError> {
    let (words, sentences) = tok.ratios()?;
    let syllables = tok.syllable_count() as f64;
    Ok(0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59)
}

pub fn dale_chall(tok: &TokenizedText, familiar: &FamiliarWordList) -> Result<f64, MetricsError> {
    let (words, sentences) = tok.ratios()?;
    let difficult_pct = tok.difficult_word_count(familiar) as f64 / words * 100.0;
    let mut score = 0.1579 * difficult_pct + 0.0496 * (words / sentences);
    if difficult_pct > 5.0 {
        score += 3.6365;
    }
    Ok(score)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextCounts {
    pub sentences: usize,
    pub words: usize,
    pub letters: usize,
    pub syllables: usize,
    pub difficult_words: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityReport {
    pub cli: f64,
    pub fkgl: f64,
    pub dcrs: f64,
    pub counts: TextCounts,
}

impl ReadabilityReport {
    /// Mean of the three scores.
    pub fn average(&self) -> f64 {
        (self.cli + self.fkgl + self.dcrs) / 3.0
    }
}

/// Tokenizes `text` once and computes all three scores from it.
pub fn readability_report(
    text: &str,
    familiar: &FamiliarWordList,
) -> Result<ReadabilityReport, MetricsError> {
    let tok = TokenizedText::new(text)?;
    Ok(ReadabilityReport {
        cli: coleman_liau(&tok)?,
        fkgl: flesch_kincaid_grade(&tok)?,
        dcrs: dale_chall(&tok, familiar)?,
        counts: TextCounts {
            sentences: tok.sentence_count(),
            words: tok.word_count(),
            letters: tok.letter_count(),
            syllables: tok.syllable_count(),
            difficult_words: tok.difficult_word_count(familiar),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEST_TEXT: &str = "This is a test. This is only a test.";

    fn words(list: &str) -> FamiliarWordList {
        FamiliarWordList::parse(list, None).unwrap()
    }

    #[test]
    fn hand_counted_test_sentence() {
        let tok = TokenizedText::new(TEST_TEXT).unwrap();
        assert_eq!(tok.sentence_count(), 2);
        assert_eq!(tok.word_count(), 9);
        assert_eq!(tok.letter_count(), 26);
        assert_eq!(tok.syllable_count(), 10);
        assert!((coleman_liau(&tok).unwrap() - (-5.391)).abs() < 1e-3);
        assert!((flesch_kincaid_grade(&tok).unwrap() - (-0.724)).abs() < 1e-3);
    }

    #[test]
    fn single_word_fkgl() {
        let tok = TokenizedText::new("Hi").unwrap();
        assert!((flesch_kincaid_grade(&tok).unwrap() - (-3.40)).abs() < 1e-2);
    }

    #[test]
    fn empty_text_errors() {
        assert_eq!(TokenizedText::new(""), Err(MetricsError::EmptyText));
        assert_eq!(
            readability_report("", FamiliarWordList::builtin()).unwrap_err(),
            MetricsError::EmptyText
        );
    }

    #[test]
    fn duplicated_text_keeps_scores() {
        let a = TokenizedText::new(TEST_TEXT).unwrap();
        let b = TokenizedText::new(&format!("{TEST_TEXT} {TEST_TEXT}")).unwrap();
        assert!((coleman_liau(&a).unwrap() - coleman_liau(&b).unwrap()).abs() < 1e-9);
        assert!(
            (flesch_kincaid_grade(&a).unwrap() - flesch_kincaid_grade(&b).unwrap()).abs() < 1e-9
        );
    }

    #[test]
    fn dale_chall_no_difficult_words() {
        let list = words("the\ncat\nsat\non\nmat\ndog\nran\nfar\n");
        let tok = TokenizedText::new("The cat sat on the mat. The dog ran far.").unwrap();
        assert_eq!(tok.word_count(), 10);
        assert!((dale_chall(&tok, &list).unwrap() - 0.248).abs() < 1e-6);

        let harder = TokenizedText::new("The cat sat on the microfluidic. The dog ran far.")
            .unwrap();
        assert!(dale_chall(&harder, &list).unwrap() > 0.248);
    }

    #[test]
    fn dale_chall_above_threshold() {
        // 20 words, 2 sentences, 2 unfamiliar: D = 10
        let list = words("a\n");
        let text = "a a a a a a a a a zyx. a a a a a a a a a qwv.";
        let tok = TokenizedText::new(text).unwrap();
        assert_eq!(tok.word_count(), 20);
        assert_eq!(tok.difficult_word_count(&list), 2);
        let expected = 0.1579 * 10.0 + 0.0496 * 10.0 + 3.6365;
        assert!((dale_chall(&tok, &list).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 5.7115).abs() < 1e-3);
    }

    #[test]
    fn report_composes_standalone_scores() {
        let list = FamiliarWordList::builtin();
        let text = "Researchers built a paper test for malaria. It works on a phone!";
        let report = readability_report(text, list).unwrap();
        let tok = TokenizedText::new(text).unwrap();
        assert_eq!(report.cli, coleman_liau(&tok).unwrap());
        assert_eq!(report.fkgl, flesch_kincaid_grade(&tok).unwrap());
        assert_eq!(report.dcrs, dale_chall(&tok, list).unwrap());
        assert_eq!(report, readability_report(text, list).unwrap());
    }

    #[test]
    fn every_sentence_has_words_and_counts_are_bounded() {
        let text = "Wait... what?! The 2 labs (in Uganda) tested 1,000 samples. Done";
        let tok = TokenizedText::new(text).unwrap();
        assert!(tok.sentence_words().iter().all(|w| !w.is_empty()));
        assert!(tok.letter_count() <= text.chars().count());
        assert!(tok.syllable_count() >= tok.word_count());
    }
}
