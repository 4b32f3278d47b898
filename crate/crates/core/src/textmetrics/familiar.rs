use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use super::MetricsError;

const BUNDLED: &str = include_str!("../../data/dale_chall.txt");

/// Inflection suffixes stripped before a second lookup.
const SUFFIXES: &[&str] = &["s", "es", "ed", "ing"];

/// The Dale-Chall list of familiar words.
///
/// Matching is lowercase and exact, with fallbacks: a possessive `'s` and the
/// suffixes `s`, `es`, `ed`, `ing` are stripped for a second lookup, and a
/// hyphenated word is familiar when every part is. Tokens without letters are
/// always familiar.
#[derive(Debug, Clone)]
pub struct FamiliarWordList {
    entries: HashSet<String>,
    source_path: Option<PathBuf>,
}

impl FamiliarWordList {
    /// The bundled list, parsed once per process.
    pub fn builtin() -> &'static FamiliarWordList {
        static LIST: OnceLock<FamiliarWordList> = OnceLock::new();
        LIST.get_or_init(|| {
            Self::parse(BUNDLED, None).expect("bundled familiar-word list is well formed")
        })
    }

    /// Loads a list file: one lowercase word per line, `#` lines ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MetricsError::WordListIo {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, source_path: Option<PathBuf>) -> Result<Self, MetricsError> {
        let mut entries = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            if word.to_lowercase() != word || word.contains(char::is_whitespace) {
                return Err(MetricsError::InvalidWordListEntry {
                    line: idx + 1,
                    entry: word.to_string(),
                });
            }
            entries.insert(word.to_string());
        }
        Ok(Self {
            entries,
            source_path,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `None` for the bundled list.
    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn is_familiar(&self, word: &str) -> bool {
        if !word.chars().any(char::is_alphabetic) {
            return true;
        }
        let lower = word.to_lowercase().replace('\u{2019}', "'");
        self.lookup(&lower)
    }

    fn lookup(&self, w: &str) -> bool {
        if self.entries.contains(w) {
            return true;
        }
        if let Some(stem) = w.strip_suffix("'s") {
            if self.entries.contains(stem) {
                return true;
            }
        }
        let stemmed = SUFFIXES.iter().any(|suffix| {
            w.strip_suffix(suffix)
                .is_some_and(|stem| !stem.is_empty() && self.entries.contains(stem))
        });
        if stemmed {
            return true;
        }
        if w.contains('-') {
            let mut parts = w.split('-').filter(|p| !p.is_empty()).peekable();
            return parts.peek().is_some() && parts.all(|p| self.is_familiar(p));
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_loads() {
        let list = FamiliarWordList::builtin();
        assert!(list.len() > 2900, "got {}", list.len());
        assert!(list.source_path().is_none());
        for w in ["the", "cat", "test", "only", "this"] {
            assert!(list.contains(w), "{w}");
        }
        assert!(!list.contains("microfluidic"));
    }

    #[test]
    fn bundled_entries_are_lowercase_and_nonempty() {
        for line in BUNDLED.lines().filter(|l| !l.starts_with('#')) {
            assert!(!line.trim().is_empty());
            assert_eq!(line, line.to_lowercase());
        }
    }

    #[test]
    fn inflection_fallbacks() {
        let list = FamiliarWordList::parse("walk\nbox\ndog\nwell\nknown\n", None).unwrap();
        assert!(list.is_familiar("Walked"));
        assert!(list.is_familiar("walking"));
        assert!(list.is_familiar("boxes"));
        assert!(list.is_familiar("dogs"));
        assert!(list.is_familiar("dog's"));
        assert!(list.is_familiar("dog\u{2019}s"));
        assert!(list.is_familiar("well-known"));
        assert!(list.is_familiar("1,000"));
        assert!(!list.is_familiar("blockchain"));
        assert!(!list.is_familiar("well-hidden"));
    }

    #[test]
    fn file_format_rules() {
        let list = FamiliarWordList::parse("# header\n\nalpha\nalpha\nbeta\n", None).unwrap();
        assert_eq!(list.len(), 2);
        let err = FamiliarWordList::parse("ok\nBad\n", None).unwrap_err();
        assert_eq!(
            err,
            MetricsError::InvalidWordListEntry {
                line: 2,
                entry: "Bad".into()
            }
        );
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("words.txt");
        std::fs::write(&path, "sun\nmoon\n").unwrap();
        let list = FamiliarWordList::load(&path).unwrap();
        assert_eq!(list.source_path(), Some(path.as_path()));
        assert!(list.is_familiar("moons"));
        assert!(matches!(
            FamiliarWordList::load(dir.path().join("missing.txt")),
            Err(MetricsError::WordListIo { .. })
        ));
    }
}
