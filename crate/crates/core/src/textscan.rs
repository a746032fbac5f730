//! Word-boundary scanning shared by renaming, leakage checks, and the
//! docgrep stub planner.

use alloc::string::String;
use alloc::vec::Vec;

/// Command-line vocabulary treats hyphen and underscore as word characters,
/// so `gcloud` does not match inside `llmcloud` or `gcloud-style`.
pub(crate) fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn boundary_before(text: &str, pos: usize) -> bool {
    pos == 0 || !text[..pos].chars().next_back().is_some_and(is_word_char)
}

fn boundary_after(text: &str, end: usize) -> bool {
    end == text.len() || !text[end..].chars().next().is_some_and(is_word_char)
}

/// Byte offsets of every occurrence of `token` in `text` at word boundaries.
/// `token` may be a multi-word phrase; interior whitespace must match
/// literally.
pub(crate) fn find_token(text: &str, token: &str) -> Vec<usize> {
    let mut hits = Vec::new();
    if token.is_empty() {
        return hits;
    }
    let mut from = 0;
    while let Some(rel) = text[from..].find(token) {
        let pos = from + rel;
        let end = pos + token.len();
        if boundary_before(text, pos) && boundary_after(text, end) {
            hits.push(pos);
        }
        // overlapping phrases are irrelevant here; step past the match start
        from = pos + text[pos..].chars().next().map_or(1, char::len_utf8);
    }
    hits
}

pub(crate) fn contains_token(text: &str, token: &str) -> bool {
    !find_token(text, token).is_empty()
}

/// Replace occurrences of the sources in `ordered` (longest first, as
/// prepared by the caller) at word boundaries, left to right, in a single
/// pass. Replaced output is never rescanned.
pub(crate) fn replace_tokens(text: &str, ordered: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let mut prev_is_word = false;
    while i < text.len() {
        let mut replaced = false;
        if !prev_is_word {
            for (source, target) in ordered {
                if text[i..].starts_with(source) && boundary_after(text, i + source.len()) {
                    out.push_str(target);
                    // the source always ends in a word char (validated), so
                    // the character before the next scan position is one
                    prev_is_word = true;
                    i += source.len();
                    replaced = true;
                    break;
                }
            }
        }
        if !replaced {
            let c = text[i..].chars().next().expect("in-bounds char");
            out.push(c);
            prev_is_word = is_word_char(c);
            i += c.len_utf8();
        }
    }
    out
}
