//! Text cleaning and trimming rules applied to every ingested string.

use super::CorpusError;
use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// Samples are trimmed to at most this many Unicode scalar values.
pub const MAX_SAMPLE_CHARS: usize = 50;

/// Normalizes and filters a raw string.
///
/// The result is NFC-normalized and contains only Unicode letters, spaces,
/// and ASCII apostrophes (kept for contractions). Runs of whitespace collapse
/// to a single space; leading/trailing spaces are stripped; case is
/// preserved. Everything else — digits, punctuation, symbols, marks — is
/// removed without leaving a space behind. Returns an empty string when
/// nothing survives.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.nfc() {
        if c == '\'' || c.general_category_group() == GeneralCategoryGroup::Letter {
            out.push(c);
        } else if c.is_whitespace() && !out.is_empty() && !out.ends_with(' ') {
            out.push(' ');
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    // Removing characters can create new compositions (Hangul jamo that were
    // separated by a dropped character), so the output needs its own NFC pass
    // to stay normalized — and to make cleaning idempotent.
    if out.is_ascii() {
        out
    } else {
        out.nfc().collect()
    }
}

/// Truncates cleaned text to at most `max_len` Unicode scalar values.
///
/// The result starts at the start of the input (cleaned text always begins
/// at a word boundary); truncation never splits a scalar value. A space left
/// dangling at the cut is stripped so the result stays in cleaned form
/// (cleaned text never ends with a space).
pub fn trim_sample(cleaned: &str, max_len: usize) -> String {
    let cut = match cleaned.char_indices().nth(max_len) {
        Some((byte_pos, _)) => &cleaned[..byte_pos],
        None => cleaned,
    };
    cut.trim_end_matches(' ').to_string()
}

/// Takes the first `eval_len` characters of a sample for fixed-length
/// evaluation, rejecting samples that are too short so the evaluation set
/// contains strings of exactly `eval_len` characters (interior spaces count;
/// they are part of the character stream the model reads).
pub fn make_eval_string(text: &str, eval_len: usize) -> Result<String, CorpusError> {
    let chars = text.chars().count();
    if chars < eval_len {
        return Err(CorpusError::SampleTooShort {
            chars,
            eval_len,
        });
    }
    Ok(text.chars().take(eval_len).collect())
}
