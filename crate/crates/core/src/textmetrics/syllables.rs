//! Vowel-group syllable heuristic.
//!
//! Each maximal run of `a e i o u y` counts as one syllable. A final lone `e`
//! after a consonant is treated as silent, except in a consonant + `le`
//! ending (`table`, `people`). The cluster `ience` is counted as two groups
//! (`sci-ence`, `au-di-ence`). Hyphenated words are counted part by part.
//! Tokens without letters (numbers) count as one syllable; every non-empty
//! word has at least one.

use super::MetricsError;

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Counts syllables in a single word token.
pub fn count_syllables(word: &str) -> Result<usize, MetricsError> {
    if word.is_empty() {
        return Err(MetricsError::EmptyWord);
    }
    let total: usize = word
        .split(['-', '\u{2010}'])
        .map(count_part)
        .sum();
    Ok(total.max(1))
}

fn count_part(part: &str) -> usize {
    let letters: Vec<char> = part
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 0;
    }

    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }

    let n = letters.len();
    let silent_e = n >= 2
        && letters[n - 1] == 'e'
        && !is_vowel(letters[n - 2])
        && !(n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]));
    if silent_e && groups > 1 {
        groups -= 1;
    }

    let word: String = letters.iter().collect();
    groups += word.matches("ience").count();

    groups.max(1)
}
