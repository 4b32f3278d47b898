//! Rule-based sentence segmentation and word tokenization.

use super::MetricsError;

/// Tokens that end in `.` but do not close a sentence. Compared lowercase,
/// including the trailing period.
const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.", "vs.", "e.g.", "i.e.", "cf.",
    "fig.", "figs.", "eq.", "eqs.", "al.", "approx.", "vol.", "pp.", "ca.", "inc.", "ltd.",
    "dept.", "ref.", "refs.", "sec.", "tab.", "u.s.", "u.k.", "ph.d.", "resp.",
];

const TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '(', '['];

/// Splits `text` into sentences on `.`, `!` and `?`.
///
/// A terminator run only closes a sentence when followed by whitespace or the
/// end of input, so decimals such as `3.14` never split. A lone `.` ending one
/// of [`ABBREVIATIONS`] is skipped. Fragments that carry no word token are
/// merged into a neighbouring sentence, so every returned sentence has at
/// least one word.
pub fn segment_sentences(text: &str) -> Result<Vec<String>, MetricsError> {
    if text.trim().is_empty() {
        return Err(MetricsError::EmptyText);
    }

    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();

    while let Some((idx, ch)) = chars.next() {
        if !TERMINATORS.contains(&ch) {
            continue;
        }
        let mut end = idx + ch.len_utf8();
        let mut run_len = 1;
        while let Some(&(j, c)) = chars.peek() {
            if TERMINATORS.contains(&c) {
                run_len += 1;
            } else if !CLOSERS.contains(&c) {
                break;
            }
            end = j + c.len_utf8();
            chars.next();
        }
        let at_boundary = match chars.peek() {
            None => true,
            Some(&(_, c)) => c.is_whitespace(),
        };
        if !at_boundary {
            continue;
        }
        if ch == '.' && run_len == 1 && is_abbreviation(&text[start..idx + 1]) {
            continue;
        }
        spans.push((start, end));
        start = end;
    }
    if !text[start..].trim().is_empty() {
        spans.push((start, text.len()));
    }

    // Fold word-less fragments ("...", stray quotes) into their neighbours.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    let mut pending: Option<usize> = None;
    for (s, e) in spans {
        let has_words = !tokenize_words(&text[s..e]).is_empty();
        if has_words {
            merged.push((pending.take().unwrap_or(s), e));
        } else if let Some(last) = merged.last_mut() {
            last.1 = e;
        } else {
            pending.get_or_insert(s);
        }
    }
    if merged.is_empty() {
        return Err(MetricsError::EmptyText);
    }
    if let (Some(p), Some(first)) = (pending, merged.first_mut()) {
        first.0 = first.0.min(p);
    }

    Ok(merged
        .into_iter()
        .map(|(s, e)| text[s..e].trim().to_string())
        .collect())
}

fn is_abbreviation(prefix_through_dot: &str) -> bool {
    let token = prefix_through_dot
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(OPENERS)
        .to_lowercase();
    ABBREVIATIONS.contains(&token.as_str())
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}')
}

/// Splits text into word tokens.
///
/// A token is a maximal run of alphanumeric characters, where an apostrophe or
/// hyphen between two alphanumerics is kept (`it's`, `state-of-the-art`) and
/// a `.` or `,` between two digits is kept (`3.14`, `1,000`).
pub fn tokenize_words(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut words = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let begin = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
                continue;
            }
            let prev = chars[j - 1].1;
            let next = chars.get(j + 1).map(|&(_, n)| n);
            let joins = match next {
                Some(n) if is_joiner(c) => prev.is_alphanumeric() && n.is_alphanumeric(),
                Some(n) if c == '.' || c == ',' => prev.is_ascii_digit() && n.is_ascii_digit(),
                _ => false,
            };
            if !joins {
                break;
            }
            j += 2;
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        words.push(&text[begin..end]);
        i = j;
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_two_terminated_clauses() {
        assert_eq!(segment_sentences("Hi. Bye.").unwrap(), vec!["Hi.", "Bye."]);
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(
            segment_sentences("Dr. Smith ran.").unwrap(),
            vec!["Dr. Smith ran."]
        );
        assert_eq!(
            segment_sentences("See Fig. 2 for details, e.g. the inset. Done!").unwrap(),
            vec!["See Fig. 2 for details, e.g. the inset.", "Done!"]
        );
    }

    #[test]
    fn unterminated_text_is_one_sentence() {
        assert_eq!(
            segment_sentences("No terminator").unwrap(),
            vec!["No terminator"]
        );
    }

    #[test]
    fn decimals_do_not_split() {
        assert_eq!(
            segment_sentences("Accuracy was 98.5 percent. It worked.").unwrap(),
            vec!["Accuracy was 98.5 percent.", "It worked."]
        );
    }

    #[test]
    fn terminator_runs_and_quotes_stay_attached() {
        assert_eq!(
            segment_sentences("He said \"stop!\" Then left?! Fine.").unwrap(),
            vec!["He said \"stop!\"", "Then left?!", "Fine."]
        );
    }

    #[test]
    fn wordless_fragments_merge() {
        assert_eq!(segment_sentences("... Hello.").unwrap(), vec!["... Hello."]);
        assert_eq!(segment_sentences("Hello. ...").unwrap(), vec!["Hello. ..."]);
    }

    #[test]
    fn empty_inputs_error() {
        assert_eq!(segment_sentences("   "), Err(MetricsError::EmptyText));
        assert_eq!(segment_sentences("?!."), Err(MetricsError::EmptyText));
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize_words("It's a test."), vec!["It's", "a", "test"]);
        assert_eq!(tokenize_words("state-of-the-art"), vec!["state-of-the-art"]);
        assert!(tokenize_words("").is_empty());
        assert_eq!(tokenize_words("-- 'quoted' --"), vec!["quoted"]);
        assert_eq!(tokenize_words("3.14 and 1,000."), vec!["3.14", "and", "1,000"]);
        assert_eq!(tokenize_words("one,two"), vec!["one", "two"]);
        assert_eq!(tokenize_words("COVID-19 rates"), vec!["COVID-19", "rates"]);
    }
}
