//! Markup stripping for raw documentation pages.
//!
//! Tags are removed and every piece of textual content is kept, including
//! navigation labels, hyperlink anchor text, and other unrelated terms.
//! Whitespace is normalized so that downstream word counting is stable:
//! runs of spaces and tabs collapse to one space, and any whitespace run
//! containing a newline collapses to one newline. The operation is
//! idempotent.

use alloc::string::String;

use super::CorpusError;

// Tags that terminate a text run; stripping one inserts a paragraph break.
const BLOCK_TAGS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "br",
    "caption",
    "dd",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "tbody",
    "td",
    "th",
    "thead",
    "tr",
    "ul",
];

/// Strip markup from `raw` after checking it is valid UTF-8.
pub fn strip_markup_bytes(raw: &[u8]) -> Result<String, CorpusError> {
    let text = core::str::from_utf8(raw).map_err(|_| CorpusError::InvalidEncoding)?;
    Ok(strip_markup(text))
}

/// Strip markup tags from `raw` and normalize whitespace. Plain text passes
/// through unchanged apart from whitespace normalization.
pub fn strip_markup(raw: &str) -> String {
    // Removing a tag can glue a kept literal '<' onto following text, which
    // then reads as a tag itself (e.g. "<<b>a"), so strip to a fixed point.
    // Each pass shortens the text; real pages converge on the first pass.
    let mut text = remove_tags(raw);
    loop {
        let again = remove_tags(&text);
        if again == text {
            break;
        }
        text = again;
    }
    normalize_whitespace(&text)
}

fn remove_tags(raw: &str) -> String {
    let bytes = raw.as_bytes();
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if bytes[i] == b'<' {
            if raw[i..].starts_with("<!--") {
                // comment: contents dropped entirely
                i = match raw[i + 4..].find("-->") {
                    Some(rel) => i + 4 + rel + 3,
                    None => raw.len(),
                };
                continue;
            }
            if let Some((name, end)) = parse_tag(raw, i) {
                if BLOCK_TAGS.binary_search(&name.as_str()).is_ok() {
                    out.push('\n');
                }
                i = end;
                if name == "script" || name == "style" {
                    i = skip_raw_content(raw, i, &name);
                }
                continue;
            }
        }
        let c = raw[i..].chars().next().expect("in-bounds char");
        out.push(c);
        i += c.len_utf8();
    }
    out
}

/// Parse a tag starting at `start` (which points at `<`). Returns the
/// lowercased tag name and the byte offset just past the closing `>`.
/// Returns `None` when the `<` does not open a tag (e.g. "a < b").
fn parse_tag(raw: &str, start: usize) -> Option<(String, usize)> {
    let mut rest = raw[start + 1..].chars();
    let first = rest.next()?;
    if !(first.is_ascii_alphabetic() || first == '/' || first == '!' || first == '?') {
        return None;
    }
    let name_start = if first == '/' { start + 2 } else { start + 1 };
    let name: String = raw[name_start..]
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    // find the closing '>', skipping quoted attribute values
    let bytes = raw.as_bytes();
    let mut i = start + 1;
    let mut quote: Option<u8> = None;
    while i < raw.len() {
        let b = bytes[i];
        match quote {
            Some(q) => {
                if b == q {
                    quote = None;
                }
            }
            None => match b {
                b'"' | b'\'' => quote = Some(b),
                b'>' => return Some((name, i + 1)),
                _ => {}
            },
        }
        i += 1;
    }
    // unterminated tag runs to end of input
    Some((name, raw.len()))
}

/// Skip everything up to and including the matching closing tag of a raw-text
/// element (`script`/`style`); their contents are code, not documentation.
fn skip_raw_content(raw: &str, from: usize, name: &str) -> usize {
    let lower = raw.to_ascii_lowercase();
    let needle = alloc::format!("</{name}");
    match lower[from..].find(&needle) {
        Some(rel) => {
            let close_start = from + rel;
            match raw[close_start..].find('>') {
                Some(gt) => close_start + gt + 1,
                None => raw.len(),
            }
        }
        None => raw.len(),
    }
}

fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    let mut pending_newline = false;
    for c in text.chars() {
        if c == '\n' || c == '\r' {
            pending_newline = true;
        } else if c.is_whitespace() {
            pending_space = true;
        } else {
            if !out.is_empty() {
                if pending_newline {
                    out.push('\n');
                } else if pending_space {
                    out.push(' ');
                }
            }
            pending_space = false;
            pending_newline = false;
            out.push(c);
        }
    }
    out
}
